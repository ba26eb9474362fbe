"""Driving free energies: internal density, external potential, gradient term.

The discrete energy of a final-layer profile u on N cells of width dx is

    E(u) = dx * sum_j E(u_j) + dx * sum_j V_j u_j
         + dx * sum_{j<N} G((u_{j+1} - u_j)/dx)

with the potential sampled once per grid at the left cell endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import GridSpec


# internal energy densities ------------------------------------------------

@dataclass(frozen=True)
class Entropy:
    """E(z) = z log z - z + 1, with E(0) = 1 by continuity."""

    convex: bool = True

    def value(self, z):
        z = np.asarray(z, dtype=float)
        out = np.full(z.shape, math.inf)
        pos = z > 0.0
        zp = z[pos]
        out[pos] = zp * np.log(zp) - zp + 1.0
        out[z == 0.0] = 1.0
        return out

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z <= 0.0):
            raise ValueError("entropy derivative needs z > 0")
        return np.log(z), 1.0 / z


@dataclass(frozen=True)
class PowerLaw:
    """E(z) = z**q / (q - 1) for q > 1; slow diffusion for q = 2."""

    q: float
    convex: bool = True

    def __post_init__(self):
        if not (self.q > 1.0):
            raise ValueError("q must exceed 1")

    def value(self, z):
        z = np.asarray(z, dtype=float)
        out = np.full(z.shape, math.inf)
        ok = z >= 0.0
        out[ok] = z[ok] ** self.q / (self.q - 1.0)
        return out

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < 0.0):
            raise ValueError("power-law derivative needs z >= 0")
        q = self.q
        return q * z ** (q - 1.0) / (q - 1.0), q * z ** (q - 2.0)


@dataclass(frozen=True)
class DoubleWell:
    """E(z) = z^2 (1 - z)^2; two wells at 0 and 1, nonconvex in between."""

    convex: bool = False

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return (z * (1.0 - z)) ** 2

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        d1 = 2.0 * z - 6.0 * z ** 2 + 4.0 * z ** 3
        d2 = 2.0 - 12.0 * z + 12.0 * z ** 2
        return d1, d2


@dataclass(frozen=True)
class CustomInternal:
    value_fn: Callable
    deriv_fn: Callable        # z -> (E'(z), E''(z))
    convex: bool = False

    def value(self, z):
        return np.asarray(self.value_fn(np.asarray(z, dtype=float)), dtype=float)

    def deriv(self, z):
        d1, d2 = self.deriv_fn(np.asarray(z, dtype=float))
        return np.asarray(d1, dtype=float), np.asarray(d2, dtype=float)


# external potentials --------------------------------------------------------

@dataclass(frozen=True)
class QuadraticPotential:
    """V(x) = a * (x - center)**2."""

    a: float
    center: float = 0.5

    def value(self, x):
        return self.a * (np.asarray(x, dtype=float) - self.center) ** 2


@dataclass(frozen=True)
class TablePotential:
    """Piecewise linear potential through (xs, values) samples on [0, 1]."""

    xs: tuple
    values: tuple

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 2:
            raise ValueError("table needs matching 1-D xs and values, length >= 2")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("table abscissae must be strictly increasing")
        if not np.all(np.isfinite(vs)):
            raise ValueError("table values must be finite")

    def value(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)


# gradient penalizations -----------------------------------------------------

@dataclass(frozen=True)
class DirichletGradient:
    """G(p) = theta * p**2 / 2."""

    theta: float

    def __post_init__(self):
        if not (self.theta > 0):
            raise ValueError("theta must be positive")

    def value(self, p):
        return 0.5 * self.theta * np.asarray(p, dtype=float) ** 2

    def deriv(self, p):
        p = np.asarray(p, dtype=float)
        return self.theta * p, np.full(p.shape, self.theta)


@dataclass(frozen=True)
class CustomGradient:
    value_fn: Callable
    deriv_fn: Callable        # p -> (G'(p), G''(p))
    modulus: float = 0.0      # lower bound on G''

    def value(self, p):
        return np.asarray(self.value_fn(np.asarray(p, dtype=float)), dtype=float)

    def deriv(self, p):
        d1, d2 = self.deriv_fn(np.asarray(p, dtype=float))
        return np.asarray(d1, dtype=float), np.asarray(d2, dtype=float)


@dataclass(frozen=True)
class EnergyForm:
    """Sum of an internal energy, an external potential and a gradient term.

    Any of the three parts may be None, meaning it is absent (potential zero).
    """

    internal: Optional[object] = None
    potential: Optional[object] = None
    gradient: Optional[object] = None


@dataclass(frozen=True)
class PotentialSamples:
    """Potential sampled at the left endpoints x_j = (j - 1) dx of each cell."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("potential samples must be a vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential samples must be finite")
        object.__setattr__(self, "values", v)


def sample_potential(form: EnergyForm, grid: GridSpec) -> PotentialSamples:
    """Evaluate the potential once per cell at the left endpoints."""
    x_left = np.arange(grid.n_dx) * grid.dx
    if form.potential is None:
        return PotentialSamples(np.zeros(grid.n_dx))
    return PotentialSamples(np.asarray(form.potential.value(x_left), dtype=float))


def _check_samples(samples: PotentialSamples, grid: GridSpec) -> np.ndarray:
    v = samples.values
    if v.shape != (grid.n_dx,):
        raise ValueError("potential samples do not match the grid")
    return v


def discrete_energy(form: EnergyForm, grid: GridSpec,
                    samples: PotentialSamples, u_final) -> float:
    """Discrete energy of a final-layer profile; +inf where undefined."""
    u = np.asarray(u_final, dtype=float)
    if u.shape != (grid.n_dx,):
        raise ValueError("profile does not match the grid")
    v = _check_samples(samples, grid)
    total = float(np.dot(v, u)) * grid.dx
    if form.internal is not None:
        vals = form.internal.value(u)
        if np.any(np.isinf(vals)) or np.any(np.isnan(vals)):
            return math.inf
        total += grid.dx * float(np.sum(vals))
    if form.gradient is not None and grid.n_dx > 1:
        p = np.diff(u) / grid.dx
        total += grid.dx * float(np.sum(form.gradient.value(p)))
    return total


def discrete_energy_grad_hess(form: EnergyForm, grid: GridSpec,
                              samples: PotentialSamples, u_final):
    """Gradient vector and symmetric tridiagonal Hessian of the discrete energy.

    The profile must lie strictly inside the domain of the internal density.
    """
    u = np.asarray(u_final, dtype=float)
    if u.shape != (grid.n_dx,):
        raise ValueError("profile does not match the grid")
    v = _check_samples(samples, grid)
    n = grid.n_dx
    dx = grid.dx
    grad = dx * v.copy()
    hess = np.zeros((n, n))
    if form.internal is not None:
        d1, d2 = form.internal.deriv(u)
        grad += dx * d1
        hess[np.arange(n), np.arange(n)] += dx * d2
    if form.gradient is not None and n > 1:
        p = np.diff(u) / dx
        g1, g2 = form.gradient.deriv(p)
        grad[:-1] -= g1
        grad[1:] += g1
        idx = np.arange(n - 1)
        hess[idx, idx] += g2 / dx
        hess[idx + 1, idx + 1] += g2 / dx
        hess[idx, idx + 1] -= g2 / dx
        hess[idx + 1, idx] -= g2 / dx
    return grad, hess
