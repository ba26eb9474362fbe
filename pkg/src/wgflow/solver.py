"""Damped Newton solver for one implicit step of the discrete flow.

The densities are eliminated through the continuity-equation march, leaving an
unconstrained problem in the n_dt * (n_dx - 1) free fluxes.  Density layers
are affine in those fluxes with constant coefficients +-dt/dx, so gradients
and Hessians of the action term reduce to weighted products with a fixed
sensitivity matrix.  Strict interiority of every density cell is maintained
with a fraction-to-boundary ratio test; global progress comes from Armijo
backtracking plus Levenberg damping when the Hessian is not usably definite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .energy import EnergyForm, PotentialSamples, discrete_energy, discrete_energy_grad_hess
from .grid import GridSpec, march_density
from .mobility import ActionParams, MobilitySpec, action_grad_hess, mobility_eval


class SolveFailure(RuntimeError):
    """The inner minimization violated a guarantee it must keep."""


class MassMismatchError(ValueError):
    """Endpoint profiles of a distance estimate carry different mass."""


@dataclass(frozen=True)
class SolveOptions:
    grad_tol_abs: float = 1e-10
    grad_tol_rel: float = 1e-12
    max_iter: int = 200
    boundary_fraction: float = 0.99
    armijo_slope: float = 1e-4
    backtrack_factor: float = 0.5
    damping_init: float = 1e-8
    damping_growth: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.boundary_fraction < 1.0):
            raise ValueError("boundary_fraction must lie in (0, 1)")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not (self.grad_tol_abs > 0.0 and self.grad_tol_rel >= 0.0):
            raise ValueError("gradient tolerances must be positive")
        if not (self.max_iter >= 1):
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Data of one implicit step: (1/2 tau) * action + terminal energy."""

    tau: float
    eps: float
    mobility: MobilitySpec
    energy: EnergyForm
    samples: PotentialSamples
    grid: GridSpec
    init_row: np.ndarray

    def __post_init__(self):
        if not (self.tau > 0.0):
            raise ValueError("tau must be positive")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        row = np.asarray(self.init_row, dtype=float)
        if row.shape != (self.grid.n_dx,):
            raise ValueError("initial row does not match the grid")
        if np.any(row <= 0.0) or np.any(row >= self.mobility.support_max):
            raise ValueError("initial row must be strictly inside (0, M)")
        object.__setattr__(self, "init_row", row)


@dataclass
class SolveResult:
    w: np.ndarray
    u: np.ndarray
    objective: float
    action_part: float
    energy_part: float
    iterations: int
    grad_norm: float
    converged: bool
    damping_used: bool


@dataclass
class DistanceResult:
    value: float
    action: float
    terminal_mismatch: float
    iterations: int
    converged: bool
    damping_used: bool


def _sensitivity(grid: GridSpec) -> np.ndarray:
    """d(density cells)/d(free fluxes); entries are 0 or -+dt/dx."""
    n = grid.n_dx
    dspace = np.zeros((n, n - 1))
    idx = np.arange(n - 1)
    dspace[idx, idx] = 1.0
    dspace[idx + 1, idx] -= 1.0
    steps = np.tril(np.ones((grid.n_dt, grid.n_dt)))
    return -(grid.dt / grid.dx) * np.kron(steps, dspace)


class _EnergyTerminal:
    """Discrete driving energy evaluated on the final density layer."""

    def __init__(self, form: EnergyForm, grid: GridSpec, samples: PotentialSamples):
        self.form = form
        self.grid = grid
        self.samples = samples

    def value(self, u_last: np.ndarray) -> float:
        return discrete_energy(self.form, self.grid, self.samples, u_last)

    def grad_hess(self, u_last: np.ndarray):
        return discrete_energy_grad_hess(self.form, self.grid, self.samples, u_last)


class _PenaltyTerminal:
    """Quadratic attachment (dx / 2 eta) * ||u(1) - target||^2."""

    def __init__(self, target: np.ndarray, eta: float, dx: float):
        self.target = target
        self.eta = eta
        self.dx = dx

    def value(self, u_last: np.ndarray) -> float:
        d = u_last - self.target
        return 0.5 * self.dx / self.eta * float(np.dot(d, d))

    def grad_hess(self, u_last: np.ndarray):
        coef = self.dx / self.eta
        grad = coef * (u_last - self.target)
        return grad, coef * np.eye(u_last.size)


class _ReducedProblem:
    """Objective, gradient and Hessian over the free fluxes."""

    def __init__(self, mobility: MobilitySpec, eps: float, grid: GridSpec,
                 init_row: np.ndarray, c_phi: float, terminal):
        self.mobility = mobility
        self.params = ActionParams(eps)
        self.grid = grid
        self.init_row = init_row
        self.c_phi = c_phi
        self.terminal = terminal
        self.coef = c_phi * grid.dt * grid.dx
        self.n_free = grid.n_dt * (grid.n_dx - 1)
        self.D = _sensitivity(grid)
        self.D_last = self.D[(grid.n_dt - 1) * grid.n_dx:, :]
        cols = np.arange(1, grid.n_dx)
        rows = np.arange(grid.n_dt)[:, None] * grid.n_dx
        self.free_cells = (rows + cols[None, :]).ravel()

    def embed(self, x: np.ndarray) -> np.ndarray:
        w = np.zeros((self.grid.n_dt, self.grid.n_dx))
        if self.n_free:
            w[:, 1:] = x.reshape(self.grid.n_dt, self.grid.n_dx - 1)
        return w

    def evaluate(self, x: np.ndarray):
        """Returns (f, action, energy, w, u); f = +inf off the feasible set."""
        w = self.embed(x)
        u = march_density(self.init_row, w, self.grid)
        if not np.all(np.isfinite(u)) or np.any(u <= 0.0) \
                or np.any(u >= self.mobility.support_max):
            return math.inf, math.nan, math.nan, w, u
        m = mobility_eval(self.mobility, u.ravel())[0]
        action = self.coef * float(np.sum((w.ravel() ** 2 + self.params.eps) / m))
        energy = self.terminal.value(u[-1])
        f = action + energy
        if not math.isfinite(f):
            return math.inf, math.nan, math.nan, w, u
        return f, action, energy, w, u

    def gradient(self, u: np.ndarray, w: np.ndarray, with_hess: bool):
        g2, h2 = action_grad_hess(self.mobility, self.params, u.ravel(), w.ravel())
        ge, he = self.terminal.grad_hess(u[-1])
        grad = self.coef * (self.D.T @ g2[:, 0] + g2[self.free_cells, 1])
        grad += self.D_last.T @ ge
        if not with_hess:
            return grad, None
        pzz = h2[:, 0, 0]
        pzv = h2[:, 0, 1]
        pvv = h2[:, 1, 1]
        hess = self.coef * (self.D.T @ (self.D * pzz[:, None]))
        cross = (self.D * pzv[:, None])[self.free_cells, :]
        hess += self.coef * (cross + cross.T)
        di = np.arange(self.n_free)
        hess[di, di] += self.coef * pvv[self.free_cells]
        hess += self.D_last.T @ (he @ self.D_last)
        return grad, 0.5 * (hess + hess.T)

    def boundary_step(self, u: np.ndarray, p: np.ndarray, kappa: float) -> float:
        """Largest step fraction keeping all density cells strictly interior."""
        du = (self.D @ p).reshape(u.shape)
        alpha = math.inf
        shrink = du < 0.0
        if np.any(shrink):
            alpha = float(np.min(u[shrink] / -du[shrink]))
        if math.isfinite(self.mobility.support_max):
            grow = du > 0.0
            if np.any(grow):
                alpha = min(alpha, float(np.min(
                    (self.mobility.support_max - u[grow]) / du[grow])))
        return min(1.0, kappa * alpha)


def _newton(problem: _ReducedProblem, opts: SolveOptions,
            x0: Optional[np.ndarray]) -> tuple:
    """Minimize the reduced objective; returns the final iterate bundle."""
    if x0 is None:
        x = np.zeros(problem.n_free)
    else:
        x = np.asarray(x0, dtype=float).copy()
    f, action, energy, w, u = problem.evaluate(x)
    if not math.isfinite(f):
        # infeasible warm start: zero flux is always admissible
        x = np.zeros(problem.n_free)
        f, action, energy, w, u = problem.evaluate(x)
    if not math.isfinite(f):
        raise SolveFailure("objective is not finite at zero flux")
    damping_used = False
    iterations = 0
    converged = False
    grad_norm = 0.0
    if problem.n_free == 0:
        return x, w, u, f, action, energy, 0, 0.0, True, False

    eye = np.eye(problem.n_free)
    for _ in range(opts.max_iter):
        grad, hess = problem.gradient(u, w, with_hess=True)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= opts.grad_tol_abs + opts.grad_tol_rel * abs(f):
            converged = True
            break
        lam = 0.0
        step_taken = False
        while lam < 1e20:
            try:
                factor = scipy.linalg.cho_factor(
                    hess + lam * eye if lam else hess, lower=True)
                p = scipy.linalg.cho_solve(factor, -grad)
            except scipy.linalg.LinAlgError:
                lam = opts.damping_init if lam == 0.0 else lam * opts.damping_growth
                damping_used = True
                continue
            slope = float(np.dot(grad, p))
            if not (slope < 0.0) or not np.all(np.isfinite(p)):
                lam = opts.damping_init if lam == 0.0 else lam * opts.damping_growth
                damping_used = True
                continue
            alpha = problem.boundary_step(u, p, opts.boundary_fraction)
            while alpha > 1e-18:
                trial = problem.evaluate(x + alpha * p)
                if trial[0] <= f + opts.armijo_slope * alpha * slope:
                    x = x + alpha * p
                    f, action, energy, w, u = trial
                    step_taken = True
                    break
                alpha *= opts.backtrack_factor
            if step_taken:
                break
            lam = opts.damping_init if lam == 0.0 else lam * opts.damping_growth
            damping_used = True
        if not step_taken:
            break
        iterations += 1
    else:
        grad, _ = problem.gradient(u, w, with_hess=False)
        grad_norm = float(np.linalg.norm(grad))
        converged = grad_norm <= opts.grad_tol_abs + opts.grad_tol_rel * abs(f)
    return x, w, u, f, action, energy, iterations, grad_norm, converged, damping_used


def _reduced(spec: ObjectiveSpec) -> _ReducedProblem:
    terminal = _EnergyTerminal(spec.energy, spec.grid, spec.samples)
    return _ReducedProblem(spec.mobility, spec.eps, spec.grid, spec.init_row,
                           0.5 / spec.tau, terminal)


def _as_free(spec_grid: GridSpec, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape == (spec_grid.n_dt, spec_grid.n_dx):
        if np.any(w[:, 0] != 0.0):
            raise ValueError("first flux column must be zero")
        return w[:, 1:].ravel().copy()
    expected = spec_grid.n_dt * (spec_grid.n_dx - 1)
    if w.shape != (expected,):
        raise ValueError("flux vector does not match the grid")
    return w


def objective_eval(spec: ObjectiveSpec, w_free) -> float:
    """Value of the reduced step objective; +inf off the feasible set."""
    problem = _reduced(spec)
    return problem.evaluate(_as_free(spec.grid, w_free))[0]


def objective_grad(spec: ObjectiveSpec, w_free) -> np.ndarray:
    """Gradient over free fluxes; raises ValueError off the feasible set."""
    problem = _reduced(spec)
    f, _, _, w, u = problem.evaluate(_as_free(spec.grid, w_free))
    if not math.isfinite(f):
        raise ValueError("infeasible flux vector")
    return problem.gradient(u, w, with_hess=False)[0]


def objective_hess(spec: ObjectiveSpec, w_free) -> np.ndarray:
    """Symmetric Hessian over free fluxes; raises ValueError off the feasible set."""
    problem = _reduced(spec)
    f, _, _, w, u = problem.evaluate(_as_free(spec.grid, w_free))
    if not math.isfinite(f):
        raise ValueError("infeasible flux vector")
    return problem.gradient(u, w, with_hess=True)[1]


def solve_step(spec: ObjectiveSpec, options: Optional[SolveOptions] = None,
               warm_start=None) -> SolveResult:
    """Minimize one implicit step starting from zero flux or a warm start.

    The returned iterate always satisfies the march identity and strict
    interiority; the objective value never exceeds the starting value.
    """
    opts = options or SolveOptions()
    problem = _reduced(spec)
    x0 = None if warm_start is None else _as_free(spec.grid, warm_start)
    f_start = problem.evaluate(np.zeros(problem.n_free))[0] if x0 is None \
        else problem.evaluate(x0)[0]
    x, w, u, f, action, energy, iters, gnorm, converged, damped = \
        _newton(problem, opts, x0)
    if math.isfinite(f_start) and f > f_start + 1e-12 * max(1.0, abs(f_start)):
        raise SolveFailure("objective increased during the solve")
    return SolveResult(w=w, u=u, objective=f, action_part=action,
                       energy_part=energy, iterations=iters, grad_norm=gnorm,
                       converged=converged, damping_used=damped)


def estimate_distance(mobility: MobilitySpec, grid: GridSpec, eps: float,
                      profile_from, profile_to,
                      penalties: Sequence[float] = (1e-2, 1e-4, 1e-6),
                      options: Optional[SolveOptions] = None) -> DistanceResult:
    """Mobility-weighted transport distance between two equal-mass profiles.

    Minimizes the regularized action with the start pinned and the end tied
    to the target by a quadratic penalty, tightened along the continuation
    schedule with warm starts.  Returns the square root of the final action
    together with the remaining terminal mismatch.
    """
    src = np.asarray(profile_from, dtype=float)
    dst = np.asarray(profile_to, dtype=float)
    if src.shape != (grid.n_dx,) or dst.shape != (grid.n_dx,):
        raise ValueError("profiles do not match the grid")
    for prof in (src, dst):
        if np.any(prof <= 0.0) or np.any(prof >= mobility.support_max):
            raise ValueError("profiles must be strictly inside (0, M)")
    penalties = tuple(float(e) for e in penalties)
    if not penalties or any(e <= 0.0 for e in penalties) \
            or any(nxt >= cur for cur, nxt in zip(penalties, penalties[1:])):
        raise ValueError("penalty schedule must be positive and decreasing")
    mass_src = grid.dx * float(np.sum(src))
    mass_dst = grid.dx * float(np.sum(dst))
    if abs(mass_src - mass_dst) > 1e-10 * max(1.0, mass_src, mass_dst):
        raise MassMismatchError(
            f"profile masses differ: {mass_src!r} vs {mass_dst!r}")
    opts = options or SolveOptions()
    x = None
    total_iters = 0
    damped = False
    for eta in penalties:
        terminal = _PenaltyTerminal(dst, eta, grid.dx)
        problem = _ReducedProblem(mobility, eps, grid, src, 1.0, terminal)
        x, w, u, f, action, energy, iters, gnorm, converged, dmp = \
            _newton(problem, opts, x)
        total_iters += iters
        damped = damped or dmp
    mismatch = float(np.max(np.abs(u[-1] - dst))) if grid.n_dt else math.nan
    return DistanceResult(value=math.sqrt(max(action, 0.0)), action=action,
                          terminal_mismatch=mismatch, iterations=total_iters,
                          converged=converged, damping_used=damped)
