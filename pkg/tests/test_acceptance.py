"""End-to-end acceptance checklist.

Every test prints exactly one summary line with the measured quantity, the
pinned tolerance, and a PASS/FAIL verdict before asserting, so a verbose run
of this module doubles as a sign-off sheet.  Desk-scale runs shrink the
published resolutions to N_dx about 100 so the whole module stays within a
few minutes.
"""
import math
import os
from dataclasses import replace

import numpy as np

from wgflow import (
    ActionParams,
    DirichletGradient,
    DoubleWell,
    EnergyForm,
    Entropy,
    FlowConfig,
    GridSpec,
    ObjectiveSpec,
    PowerLaw,
    PRESETS,
    QuadraticPotential,
    action_density,
    action_grad_hess,
    bounded_support,
    cell_average,
    check_energy_slack,
    discrete_energy,
    discrete_energy_grad_hess,
    estimate_distance,
    linear,
    objective_eval,
    objective_grad,
    objective_hess,
    parse_config,
    power,
    read_snapshot_csv,
    regularize_initial,
    run_experiment,
    run_flow,
    sample_potential,
    solve_step,
)
from wgflow.cli import INITIAL_PROFILES, scaled_resolution

from oracles import (barenblatt_profile, central_diff_grad, gibbs_profile,
                     nested_grid_min, w2_inverse_cdf)


def _line(label, ok, detail):
    print(f"{label}: {detail} {'PASS' if ok else 'FAIL'}")


# scale factors that put every preset at N_dx in [50, 100]
_DESK = {"fp-linear": 3.0, "fp-porous": 3.0, "cahn-hilliard-a": 2.0,
         "cahn-hilliard-b": 2.0, "thin-film": 4.0}
_RUNS = {}


def _desk_run(name):
    """120 outer steps of a preset at desk scale, cached across tests."""
    if name not in _RUNS:
        cfg = replace(parse_config(name), scale=_DESK[name], steps=120)
        n_dx, tau = scaled_resolution(cfg)
        flow_cfg = FlowConfig(tau=tau, steps=cfg.steps, eps=cfg.eps,
                              grid=GridSpec(n_dt=cfg.n_dt, n_dx=n_dx),
                              mobility=cfg.mobility, energy=cfg.energy,
                              solve_options=cfg.solve_options,
                              clamp_abort_mass=cfg.clamp_abort_mass)
        _RUNS[name] = (flow_cfg, run_flow(flow_cfg, cfg.initial))
    return _RUNS[name]


def _rel_gap(exact, approx):
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    return float(np.max(np.abs(exact - approx)) /
                 max(1.0, float(np.max(np.abs(approx)))))


def test_derivatives_match_central_differences():
    """Analytic gradients and Hessians of the action density, the discrete
    energy, and the step objective agree with central differences."""
    rng = np.random.default_rng(101)
    worst = 0.0

    for mobility in (linear(1.2), power(0.9, 0.55),
                     bounded_support(1.1, 1.0, 0.7, 2.5)):
        hi = min(mobility.support_max, 3.0)
        for _ in range(100):
            z = float(rng.uniform(0.08 * hi, 0.9 * hi))
            v = float(rng.uniform(-1.5, 1.5))
            par = ActionParams(float(rng.choice([0.0, 1e-8, 1e-3])))
            point = np.array([z, v])
            grad, hess = action_grad_hess(mobility, par, z, v)
            val = lambda p: float(action_density(mobility, par, p[0], p[1]))
            worst = max(worst, _rel_gap(grad, central_diff_grad(val, point)))
            rows = [central_diff_grad(
                lambda p, i=i: action_grad_hess(mobility, par, p[0], p[1])[0][i],
                point) for i in range(2)]
            worst = max(worst, _rel_gap(hess, np.stack(rows)))

    for internal in (Entropy(), PowerLaw(2.5), DoubleWell()):
        for _ in range(100):
            grid = GridSpec(1, int(rng.integers(2, 8)))
            u = rng.uniform(0.15, 0.85, grid.n_dx)
            form = EnergyForm(
                internal=internal,
                potential=QuadraticPotential(float(rng.uniform(0.0, 40.0)), 0.5),
                gradient=DirichletGradient(float(rng.uniform(1e-3, 0.2))))
            samples = sample_potential(form, grid)
            grad, hess = discrete_energy_grad_hess(form, grid, samples, u)
            val = lambda vec: discrete_energy(form, grid, samples, vec)
            worst = max(worst, _rel_gap(grad, central_diff_grad(val, u)))
            rows = [central_diff_grad(
                lambda vec, i=i: discrete_energy_grad_hess(
                    form, grid, samples, vec)[0][i], u)
                for i in range(grid.n_dx)]
            worst = max(worst, _rel_gap(hess, np.stack(rows)))

    for mobility in (linear(1.3), power(0.8, 0.6),
                     bounded_support(1.0, 1.0, 0.5, 3.0)):
        hi = min(mobility.support_max, 2.0)
        for _ in range(100):
            grid = GridSpec(int(rng.integers(1, 3)), int(rng.integers(2, 6)))
            init = rng.uniform(0.3 * hi, 0.7 * hi, grid.n_dx)
            form = EnergyForm(
                internal=Entropy(),
                potential=QuadraticPotential(float(rng.uniform(0.0, 30.0)), 0.5),
                gradient=DirichletGradient(float(rng.uniform(1e-3, 0.1))))
            spec = ObjectiveSpec(tau=float(rng.uniform(0.05, 0.5)), eps=1e-4,
                                 mobility=mobility, energy=form,
                                 samples=sample_potential(form, grid),
                                 grid=grid, init_row=init)
            x = rng.uniform(-0.01, 0.01, grid.n_dt * (grid.n_dx - 1))
            worst = max(worst, _rel_gap(
                objective_grad(spec, x),
                central_diff_grad(lambda v: objective_eval(spec, v), x)))
            rows = [central_diff_grad(
                lambda v, i=i: objective_grad(spec, v)[i], x)
                for i in range(x.size)]
            worst = max(worst, _rel_gap(objective_hess(spec, x), np.stack(rows)))

    ok = worst < 1e-6
    _line("derivatives vs central differences", ok,
          f"max relative error {worst:.3e} (tol 1e-06)")
    assert ok


def test_mass_is_conserved_on_every_desk_scale_preset():
    """dx * sum(u) stays at its initial value to 1e-12 relative, each step."""
    worst = 0.0
    for name in sorted(PRESETS):
        _, trajectory = _desk_run(name)
        masses = np.array([d.mass for d in trajectory.diagnostics])
        worst = max(worst, float(np.max(np.abs(masses - masses[0]))
                                 / abs(masses[0])))
    ok = worst <= 1e-12
    _line("mass conservation on desk presets", ok,
          f"max relative drift {worst:.3e} (tol 1e-12)")
    assert ok


def test_energy_descends_within_slack_on_every_desk_scale_preset():
    """Each step may raise the energy only by the zero-flux competitor cost."""
    worst = -math.inf
    all_passed = True
    for name in sorted(PRESETS):
        flow_cfg, trajectory = _desk_run(name)
        report = check_energy_slack(trajectory, flow_cfg)
        worst = max(worst, report.max_violation)
        all_passed = all_passed and report.passed
    ok = all_passed and worst <= 1e-9
    _line("energy descent with regularization slack", ok,
          f"max violation {worst:.3e} (tol 1e-09)")
    assert ok


def test_solver_reaches_global_minimum_on_small_instances():
    """50 random convex steps with one layer and 2-4 cells, checked against
    an exhaustive nested grid search over the free transfers."""
    rng = np.random.default_rng(41)
    mobilities = (linear(1.0), power(1.0, 0.5),
                  bounded_support(1.0, 1.0, 1.0, 2.0))
    worst_gap = -math.inf
    for k in range(50):
        mobility = mobilities[k % 3]
        hi = min(mobility.support_max, 2.0)
        n_dx = int(rng.integers(2, 5))
        grid = GridSpec(1, n_dx)
        init = rng.uniform(0.3 * hi, 0.7 * hi, n_dx)
        q = float(rng.uniform(1.5, 3.0))
        theta = float(rng.uniform(0.0, 0.1))
        form = EnergyForm(internal=PowerLaw(q),
                          potential=QuadraticPotential(float(rng.uniform(0.0, 20.0)), 0.5),
                          gradient=DirichletGradient(theta) if theta > 0.0 else None)
        tau = float(rng.uniform(0.05, 0.3))
        eps = float(rng.uniform(1e-6, 1e-3))
        samples = sample_potential(form, grid)
        spec = ObjectiveSpec(tau=tau, eps=eps, mobility=mobility, energy=form,
                             samples=samples, grid=grid, init_row=init)
        result = solve_step(spec)
        if mobility.kind == "linear":
            m_fn = lambda z: z
        elif mobility.kind == "power":
            m_fn = lambda z: np.sqrt(z)
        else:
            m_fn = lambda z: z * (2.0 - z)
        oracle = nested_grid_min(
            init, grid.dx, tau, eps, m_fn=m_fn,
            support_max=mobility.support_max,
            e_fn=lambda z, q=q: z ** q / (q - 1.0),
            v_samples=samples.values, theta=theta,
            box=1.2 * grid.dx * float(init.sum()) + 0.5)
        worst_gap = max(worst_gap, result.objective - oracle)
    ok = worst_gap <= 1e-8
    _line("small-instance global optimality", ok,
          f"worst objective excess over grid-search oracle {worst_gap:.3e} "
          f"(tol 1e-08)")
    assert ok


def test_linear_diffusion_settles_into_gibbs_state(tmp_path):
    """Entropy plus quadratic confinement relaxes to exp(-V), mass matched."""
    cfg = replace(parse_config("fp-linear"), n_dx=100, tau=1e-3, steps=500,
                  snapshot_every=500, out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 0
    _, u = read_snapshot_csv(os.path.join(cfg.out_dir, "snap_000500.csv"))
    target = gibbs_profile(100, a=50.0, center=0.5, mass=0.01 * float(u.sum()))
    l1 = 0.01 * float(np.sum(np.abs(u - target)))
    ok = l1 <= 5e-2
    _line("long-time state vs Gibbs profile", ok,
          f"L1 distance {l1:.3e} (tol 5e-02)")
    assert ok


def test_quadratic_diffusion_settles_into_compact_parabola(tmp_path):
    """Quadratic internal energy ends on max((C - V)/2, 0) with matched mass."""
    cfg = replace(parse_config("fp-porous"), n_dx=100, tau=1e-3, steps=500,
                  snapshot_every=500, out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 0
    _, u = read_snapshot_csv(os.path.join(cfg.out_dir, "snap_000500.csv"))
    target = barenblatt_profile(100, a=50.0, center=0.5,
                                mass=0.01 * float(u.sum()))
    l1 = 0.01 * float(np.sum(np.abs(u - target)))
    ok = l1 <= 5e-2
    _line("long-time state vs compact parabola", ok,
          f"L1 distance {l1:.3e} (tol 5e-02)")
    assert ok


def test_distance_estimate_matches_quantile_oracle():
    """With linear unit mobility the transport distance is the L2 norm of the
    quantile difference; check both orders and their agreement."""
    grid = GridSpec(8, 64)
    x = (np.arange(64) + 0.5) / 64.0
    a = 0.2 + np.exp(-60.0 * (x - 0.35) ** 2)
    b = 0.2 + np.exp(-60.0 * (x - 0.62) ** 2)
    a /= grid.dx * a.sum()
    b /= grid.dx * b.sum()
    exact = w2_inverse_cdf(a, b, grid.dx)
    forward = estimate_distance(linear(1.0), grid, 1e-10, a, b).value
    backward = estimate_distance(linear(1.0), grid, 1e-10, b, a).value
    err = max(abs(forward - exact), abs(backward - exact)) / exact
    swap = abs(forward - backward) / exact
    ok = err <= 0.05 and swap <= 0.05
    _line("transport distance vs quantile oracle", ok,
          f"relative error {err:.3e}, swap asymmetry {swap:.3e} (tol 5e-02)")
    assert ok


def test_film_profile_ruptures_in_the_expected_window():
    """Pure interfacial energy drives the minimum thickness below 10% of its
    starting value somewhere in t in [0.005, 0.05]."""
    cfg = parse_config("thin-film")
    flow_cfg = FlowConfig(tau=1e-4, steps=500, eps=cfg.eps,
                          grid=GridSpec(n_dt=cfg.n_dt, n_dx=100),
                          mobility=cfg.mobility, energy=cfg.energy)
    trajectory = run_flow(flow_cfg, cfg.initial)
    floor0 = float(np.min(trajectory.profiles[0]))
    window = [float(np.min(trajectory.profiles[k])) for k in range(50, 501)]
    depth = min(window)
    ok = depth < 0.1 * floor0
    _line("film rupture indicator", ok,
          f"min thickness {depth:.3e} vs 10% of initial {0.1 * floor0:.3e}")
    assert ok


def test_double_well_flow_separates_into_phases():
    """The two-well energy drives at least 80% of cells to u < 0.1 or
    u > 0.9 by the end of a desk-scale run."""
    cfg = replace(parse_config("cahn-hilliard-a"), scale=2.0, steps=5600)
    n_dx, tau = scaled_resolution(cfg)
    flow_cfg = FlowConfig(tau=tau, steps=cfg.steps, eps=cfg.eps,
                          grid=GridSpec(n_dt=cfg.n_dt, n_dx=n_dx),
                          mobility=cfg.mobility, energy=cfg.energy)
    trajectory = run_flow(flow_cfg, cfg.initial)
    final = trajectory.profiles[-1]
    wells = int(np.sum((final < 0.1) | (final > 0.9)))
    ok = wells >= 80
    _line("phase separation fraction", ok,
          f"{wells}/100 cells inside the wells (need >= 80)")
    assert ok


def test_step_objective_is_cauchy_under_refinement():
    """Optimal one-step values at N_dx = 25, 50, 100, 200 approach a limit:
    successive differences shrink monotonically."""
    form = EnergyForm(internal=Entropy(),
                      potential=QuadraticPotential(50.0, 0.5))
    values = []
    for n_dx in (25, 50, 100, 200):
        grid = GridSpec(2, n_dx)
        u0 = regularize_initial(
            cell_average(INITIAL_PROFILES["cos8pi"], n_dx), 1e-8, math.inf)
        spec = ObjectiveSpec(tau=1e-3, eps=1e-8, mobility=linear(1.0),
                             energy=form, samples=sample_potential(form, grid),
                             grid=grid, init_row=u0)
        values.append(solve_step(spec).objective)
    diffs = np.abs(np.diff(values))
    ok = bool(diffs[0] > diffs[1] > diffs[2])
    _line("refinement consistency of step values", ok,
          "differences " + " > ".join(f"{d:.5f}" for d in diffs))
    assert ok
