"""Energy densities, the discrete energy sum and its derivatives."""
import math

import numpy as np
import pytest

from wgflow import (
    DirichletGradient,
    DoubleWell,
    EnergyForm,
    Entropy,
    GridSpec,
    PowerLaw,
    QuadraticPotential,
    TablePotential,
    discrete_energy,
    discrete_energy_grad_hess,
    sample_potential,
)

from oracles import central_diff_grad, central_diff_hess


def test_entropy_values():
    e = Entropy()
    assert e.value(1.0) == pytest.approx(0.0, abs=1e-15)
    assert e.value(0.0) == pytest.approx(1.0, abs=1e-15)
    d1, d2 = e.deriv(np.array([1.0, 2.0]))
    assert d1[0] == pytest.approx(0.0, abs=1e-15)
    assert d1[1] == pytest.approx(math.log(2.0), rel=1e-14)
    assert d2[1] == pytest.approx(0.5, rel=1e-14)


def test_double_well_hand_derivatives():
    e = DoubleWell()
    z = 0.3
    assert e.value(z) == pytest.approx(z * z * (1 - z) ** 2, rel=1e-14)
    d1, d2 = e.deriv(z)
    assert d1 == pytest.approx(2 * z - 6 * z ** 2 + 4 * z ** 3, rel=1e-13)
    assert d2 == pytest.approx(2 - 12 * z + 12 * z ** 2, rel=1e-13)


def test_power_law_requires_superlinear_exponent():
    with pytest.raises(ValueError):
        PowerLaw(1.0)
    with pytest.raises(ValueError):
        PowerLaw(0.5)
    assert PowerLaw(2.0).value(3.0) == pytest.approx(9.0)


def test_dirichlet_gradient_requires_positive_modulus():
    with pytest.raises(ValueError):
        DirichletGradient(0.0)
    with pytest.raises(ValueError):
        DirichletGradient(-0.1)


def test_table_potential_validation():
    with pytest.raises(ValueError):
        TablePotential(xs=(0.0, 0.0, 1.0), values=(1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        TablePotential(xs=(0.0, 1.0), values=(1.0,))
    tab = TablePotential(xs=(0.0, 0.5, 1.0), values=(1.0, 0.0, 1.0))
    assert tab.value(0.25) == pytest.approx(0.5)


def test_sample_potential_zero_and_quadratic():
    grid2 = GridSpec(1, 2)
    none_form = EnergyForm()
    assert np.all(sample_potential(none_form, grid2).values == 0.0)
    quad = EnergyForm(potential=QuadraticPotential(50.0, 0.5))
    np.testing.assert_allclose(sample_potential(quad, grid2).values, [12.5, 0.0])
    grid4 = GridSpec(1, 4)
    np.testing.assert_allclose(sample_potential(quad, grid4).values,
                               [12.5, 3.125, 0.0, 3.125])


def test_discrete_energy_trivial_cases():
    grid = GridSpec(1, 2)
    empty = EnergyForm()
    samples = sample_potential(empty, grid)
    assert discrete_energy(empty, grid, samples, np.array([0.4, 1.9])) == 0.0

    graddy = EnergyForm(gradient=DirichletGradient(3.0))
    gs = sample_potential(graddy, grid)
    assert discrete_energy(graddy, grid, gs, np.array([0.7, 0.7])) == 0.0

    ent = EnergyForm(internal=Entropy())
    es = sample_potential(ent, grid)
    assert discrete_energy(ent, grid, es, np.array([1.0, 1.0])) == pytest.approx(0.0, abs=1e-15)


def test_discrete_energy_infinite_outside_domain():
    grid = GridSpec(1, 3)
    ent = EnergyForm(internal=Entropy())
    samples = sample_potential(ent, grid)
    assert discrete_energy(ent, grid, samples, np.array([0.5, -0.1, 1.0])) == math.inf


def test_constant_profile_energy_equals_density_value():
    # gradient term vanishes on constants and dx * n_dx = 1
    grid = GridSpec(1, 7)
    form = EnergyForm(internal=PowerLaw(3.0), gradient=DirichletGradient(0.2))
    samples = sample_potential(form, grid)
    c = 0.83
    expect = PowerLaw(3.0).value(c)
    assert discrete_energy(form, grid, samples, np.full(7, c)) == pytest.approx(expect, rel=1e-14)


def test_grad_hess_trivial_and_hand_cases():
    grid = GridSpec(1, 2)
    empty = EnergyForm()
    samples = sample_potential(empty, grid)
    g, h = discrete_energy_grad_hess(empty, grid, samples, np.array([0.3, 0.9]))
    assert np.all(g == 0.0) and np.all(h == 0.0)

    # E(z) = z^2 so gradient_j = dx * 2 u_j with dx = 1/2
    form = EnergyForm(internal=PowerLaw(2.0))
    fs = sample_potential(form, grid)
    g2, h2 = discrete_energy_grad_hess(form, grid, fs, np.array([1.0, 2.0]))
    np.testing.assert_allclose(g2, [1.0, 2.0], rtol=1e-14)
    np.testing.assert_allclose(h2, np.diag([1.0, 1.0]), rtol=1e-14)


def _random_form(rng):
    internal = rng.choice([None, "ent", "pow", "dw"])
    if internal == "ent":
        internal = Entropy()
    elif internal == "pow":
        internal = PowerLaw(float(rng.uniform(1.5, 3.5)))
    elif internal == "dw":
        internal = DoubleWell()
    potential = rng.choice([None, "quad", "tab"])
    if potential == "quad":
        potential = QuadraticPotential(float(rng.uniform(0.0, 60.0)), float(rng.uniform(0.2, 0.8)))
    elif potential == "tab":
        xs = np.linspace(0.0, 1.0, 5)
        potential = TablePotential(xs=tuple(xs), values=tuple(rng.uniform(0.0, 3.0, 5)))
    gradient = DirichletGradient(float(rng.uniform(1e-3, 0.5))) if rng.random() < 0.5 else None
    return EnergyForm(internal=internal, potential=potential, gradient=gradient)


def test_grad_hess_matches_finite_differences():
    """Analytic derivatives of the discrete energy against an FD oracle."""
    rng = np.random.default_rng(23)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        grid = GridSpec(1, n)
        form = _random_form(rng)
        samples = sample_potential(form, grid)
        u = rng.uniform(0.2, 1.8, n)
        f = lambda x: discrete_energy(form, grid, samples, x)
        g, h = discrete_energy_grad_hess(form, grid, samples, u)
        g_fd = central_diff_grad(f, u)
        assert np.linalg.norm(g - g_fd) < 1e-6 * max(1.0, np.linalg.norm(g_fd))
        h_fd = central_diff_hess(f, u)
        assert np.max(np.abs(h - h_fd)) < 1e-5 * max(1.0, np.max(np.abs(h_fd)))


def test_hessian_tridiagonal_and_convex_case_psd():
    rng = np.random.default_rng(29)
    for _ in range(100):
        n = int(rng.integers(3, 8))
        grid = GridSpec(1, n)
        form = EnergyForm(internal=Entropy() if rng.random() < 0.5 else PowerLaw(2.5),
                          potential=QuadraticPotential(30.0, 0.5),
                          gradient=DirichletGradient(0.1))
        samples = sample_potential(form, grid)
        u = rng.uniform(0.2, 1.8, n)
        _, h = discrete_energy_grad_hess(form, grid, samples, u)
        beyond = np.triu(np.abs(h), 2)
        assert np.max(beyond) == 0.0
        d = rng.standard_normal(n)
        assert d @ h @ d >= -1e-10 * d @ d
