"""Space-time lattice on [0,1]^2, projection of initial data and the density march.

A step couples N_dt density layers to N_dt flux rows through the discrete
continuity equation.  The first flux column is pinned to zero (no-flux walls;
the wrap-around column in the update reads that same zero), so the densities
are determined by the free fluxes alone:

    u[i, j] = u[i-1, j] - (dt/dx) * (w[i, j+1 (wrap)] - w[i, j])

which conserves total mass exactly, layer by layer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice with n_dt time layers and n_dx cells on [0, 1]."""

    n_dt: int
    n_dx: int

    def __post_init__(self):
        if not (isinstance(self.n_dt, int) and self.n_dt >= 1):
            raise ValueError("n_dt must be a positive integer")
        if not (isinstance(self.n_dx, int) and self.n_dx >= 1):
            raise ValueError("n_dx must be a positive integer")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_dt

    @property
    def dx(self) -> float:
        return 1.0 / self.n_dx

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_dx) + 0.5) * self.dx

    def cell_edges(self) -> np.ndarray:
        return np.arange(self.n_dx + 1) * self.dx


@dataclass(frozen=True)
class StepState:
    """Densities and fluxes of one step, tied by the continuity equation."""

    init_row: np.ndarray
    w: np.ndarray
    u: np.ndarray

    @staticmethod
    def from_fluxes(init_row, w, grid: GridSpec) -> "StepState":
        init_row = np.asarray(init_row, dtype=float)
        w = np.asarray(w, dtype=float)
        return StepState(init_row, w, march_density(init_row, w, grid))


def cell_average(u0, n_dx: int) -> np.ndarray:
    """Cell averages of an initial profile on n_dx uniform cells.

    Callables are averaged with 16-node Gauss-Legendre quadrature per cell
    (exact through polynomial degree 31).  Tabulated data, either a vector of
    uniform samples on [0, 1] or a pair (xs, values), is interpreted as its
    piecewise linear interpolant and averaged exactly.
    """
    if not (isinstance(n_dx, int) and n_dx >= 1):
        raise ValueError("n_dx must be a positive integer")
    dx = 1.0 / n_dx
    if callable(u0):
        edges = np.arange(n_dx) * dx
        # map the reference nodes into every cell at once
        pts = edges[:, None] + 0.5 * dx * (_GL_NODES[None, :] + 1.0)
        vals = np.asarray(u0(pts), dtype=float)
        if vals.shape != pts.shape:
            raise ValueError("initial profile callable must evaluate elementwise")
        return 0.5 * vals @ _GL_WEIGHTS
    if isinstance(u0, tuple) and len(u0) == 2:
        xs = np.asarray(u0[0], dtype=float)
        ys = np.asarray(u0[1], dtype=float)
    else:
        ys = np.asarray(u0, dtype=float)
        if ys.ndim != 1 or ys.size < 2:
            raise ValueError("sampled profile must be a vector of length >= 2")
        xs = np.linspace(0.0, 1.0, ys.size)
    if xs[0] > 0.0 or xs[-1] < 1.0:
        raise ValueError("sample abscissae must cover [0, 1]")
    if np.any(np.diff(xs) <= 0.0):
        raise ValueError("sample abscissae must be strictly increasing")
    # integrate the piecewise linear interpolant exactly: trapezoid between
    # consecutive breakpoints after inserting the cell edges
    grid_x = np.union1d(xs, np.arange(n_dx + 1) * dx)
    grid_y = np.interp(grid_x, xs, ys)
    seg = 0.5 * (grid_y[1:] + grid_y[:-1]) * np.diff(grid_x)
    # classify segments by their midpoint so exact cell edges cannot misround
    mid = 0.5 * (grid_x[:-1] + grid_x[1:])
    cell_of_seg = np.clip((mid / dx).astype(int), 0, n_dx - 1)
    out = np.zeros(n_dx)
    np.add.at(out, cell_of_seg, seg)
    return out / dx


def regularize_initial(u_hat, eps: float, support_max: float) -> np.ndarray:
    """Push cell averages strictly inside the support before a step.

    Unbounded support shifts by eps; a finite support M applies the affine
    map u + eps*(1 - 2u/M), which keeps [0, M] inside [eps, M - eps].
    """
    u_hat = np.asarray(u_hat, dtype=float)
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if np.any(u_hat < 0.0):
        raise ValueError("cell averages must be nonnegative")
    if math.isfinite(support_max):
        if eps >= support_max / 2.0:
            raise ValueError("eps must be below support_max / 2")
        if np.any(u_hat > support_max):
            raise ValueError("cell averages exceed the support")
        return u_hat + eps * (1.0 - 2.0 * u_hat / support_max)
    return u_hat + eps


def deregularize(u, eps: float, support_max: float):
    """Invert :func:`regularize_initial`; clamp round-off escapes to [0, M].

    Returns (profile, clamp_l1) where clamp_l1 is the unweighted l1 norm of
    the clamping corrections (zero when the inverse lands inside the support).
    """
    u = np.asarray(u, dtype=float)
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if math.isfinite(support_max):
        if eps >= support_max / 2.0:
            raise ValueError("eps must be below support_max / 2")
        raw = (u - eps) / (1.0 - 2.0 * eps / support_max)
        clipped = np.clip(raw, 0.0, support_max)
    else:
        raw = u - eps
        clipped = np.maximum(raw, 0.0)
    return clipped, float(np.sum(np.abs(clipped - raw)))


def march_density(init_row, w, grid: GridSpec) -> np.ndarray:
    """Propagate the initial row through the discrete continuity equation.

    w has one row per time layer; its first column must be zero.  Returns the
    (n_dt, n_dx) array of density layers (the initial row is not included).
    """
    init_row = np.asarray(init_row, dtype=float)
    w = np.asarray(w, dtype=float)
    if init_row.shape != (grid.n_dx,):
        raise ValueError("initial row does not match the grid")
    if w.shape != (grid.n_dt, grid.n_dx):
        raise ValueError("flux array does not match the grid")
    if np.any(w[:, 0] != 0.0):
        raise ValueError("first flux column must be zero")
    flux_div = np.roll(w, -1, axis=1) - w
    return init_row[None, :] - (grid.dt / grid.dx) * np.cumsum(flux_div, axis=0)


def ce_residual(init_row, u, w, grid: GridSpec) -> float:
    """Maximum absolute residual of the discrete continuity equations."""
    init_row = np.asarray(init_row, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if init_row.shape != (grid.n_dx,) or u.shape != (grid.n_dt, grid.n_dx) \
            or w.shape != (grid.n_dt, grid.n_dx):
        raise ValueError("shapes do not match the grid")
    prev = np.vstack([init_row, u[:-1]])
    interior = (u - prev) * grid.dx + (np.roll(w, -1, axis=1) - w) * grid.dt
    worst = float(np.max(np.abs(interior)))
    return max(worst, float(np.max(np.abs(w[:, 0]))))
