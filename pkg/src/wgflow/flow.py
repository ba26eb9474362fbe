"""Outer minimizing-movement iteration and trajectory bookkeeping.

Each outer step solves one implicit problem whose initial row is the previous
profile, after an explicit deregularize/regularize round trip that is the
identity unless round-off pushed an entry outside the support (such clamping
is accumulated in the diagnostics and aborts the run past a threshold).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .energy import EnergyForm, discrete_energy, sample_potential
from .grid import GridSpec, cell_average, deregularize, regularize_initial
from .mobility import MobilitySpec, mobility_eval
from .solver import ObjectiveSpec, SolveOptions, solve_step


class FlowAbort(RuntimeError):
    """The outer iteration hit an unrecoverable state."""


@dataclass(frozen=True)
class FlowConfig:
    tau: float
    steps: int
    eps: float
    grid: GridSpec
    mobility: MobilitySpec
    energy: EnergyForm
    snapshot_every: int = 1
    solve_options: SolveOptions = field(default_factory=SolveOptions)
    clamp_abort_mass: float = 1e-6

    def __post_init__(self):
        if not (self.tau > 0.0):
            raise ValueError("tau must be positive")
        if not (isinstance(self.steps, int) and self.steps >= 0):
            raise ValueError("steps must be a nonnegative integer")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if not (isinstance(self.snapshot_every, int) and self.snapshot_every >= 1):
            raise ValueError("snapshot_every must be a positive integer")


@dataclass
class StepDiagnostics:
    mass: float
    energy: float
    action: float
    newton_iters: int
    grad_norm: float
    clamped_mass: float


@dataclass
class Trajectory:
    times: np.ndarray
    profiles: List[np.ndarray]
    diagnostics: List[StepDiagnostics]

    @property
    def steps(self) -> int:
        return len(self.profiles) - 1


@dataclass
class SlackReport:
    passed: bool
    max_violation: float
    per_step: np.ndarray
    tolerance: float


def run_flow(config: FlowConfig, u0) -> Trajectory:
    """Iterate the implicit scheme for config.steps outer steps.

    u0 may be a callable on [0, 1] or tabulated samples; it is projected to
    cell averages, which must be admissible (inside [0, M] with finite
    energy after regularization).
    """
    grid = config.grid
    M = config.mobility.support_max
    if not callable(u0):
        raw = np.asarray(u0[1] if isinstance(u0, tuple) else u0, dtype=float)
        if np.any(raw < 0.0) or np.any(raw > M):
            raise ValueError("initial samples leave [0, M]")
    u_hat = cell_average(u0, grid.n_dx)
    if np.any(u_hat < 0.0) or np.any(u_hat > M):
        raise ValueError("initial cell averages leave [0, M]")
    samples = sample_potential(config.energy, grid)
    profile = regularize_initial(u_hat, config.eps, M)
    energy0 = discrete_energy(config.energy, grid, samples, profile)
    if not math.isfinite(energy0):
        raise ValueError("initial profile has infinite energy")
    dx = grid.dx
    profiles = [profile]
    diagnostics = [StepDiagnostics(mass=dx * float(np.sum(profile)), energy=energy0,
                                   action=0.0, newton_iters=0, grad_norm=0.0,
                                   clamped_mass=0.0)]
    warm: Optional[np.ndarray] = None
    for _ in range(config.steps):
        prev = profiles[-1]
        lowered, clamp_l1 = deregularize(prev, config.eps, M)
        clamped_mass = dx * clamp_l1
        if clamped_mass > config.clamp_abort_mass:
            raise FlowAbort(
                f"clamped mass {clamped_mass:.3e} exceeds "
                f"{config.clamp_abort_mass:.3e} at step {len(profiles)}")
        init_row = regularize_initial(lowered, config.eps, M)
        if clamp_l1 == 0.0 and not np.allclose(init_row, prev, rtol=0.0,
                                               atol=1e-13 * max(1.0, float(np.max(prev)))):
            raise FlowAbort("deregularize/regularize round trip lost the profile")
        spec = ObjectiveSpec(tau=config.tau, eps=config.eps,
                             mobility=config.mobility, energy=config.energy,
                             samples=samples, grid=grid, init_row=init_row)
        result = solve_step(spec, config.solve_options, warm_start=warm)
        warm = result.w
        profiles.append(result.u[-1].copy())
        diagnostics.append(StepDiagnostics(
            mass=dx * float(np.sum(profiles[-1])),
            energy=result.energy_part,
            action=result.action_part,
            newton_iters=result.iterations,
            grad_norm=result.grad_norm,
            clamped_mass=clamped_mass))
    times = config.tau * np.arange(len(profiles))
    return Trajectory(times=times, profiles=profiles, diagnostics=diagnostics)


def interpolate_pwc(trajectory: Trajectory, t: float) -> np.ndarray:
    """Piecewise-constant-in-time interpolant, left-open: value at t is
    profile ceil(t/tau), with profile 0 at t = 0."""
    times = trajectory.times
    if len(times) < 1:
        raise ValueError("empty trajectory")
    tau = times[1] - times[0] if len(times) > 1 else 1.0
    t_end = times[-1]
    if t < -1e-12 * max(1.0, t_end) or t > t_end * (1.0 + 1e-12) + 1e-300:
        raise ValueError(f"time {t} outside [0, {t_end}]")
    k = max(0, min(len(times) - 1, math.ceil(t / tau - 1e-12)))
    return trajectory.profiles[k]


def check_energy_slack(trajectory: Trajectory, config: FlowConfig,
                       tolerance: float = 1e-9) -> SlackReport:
    """Verify the per-step energy inequality against the zero-flux competitor.

    The minimizer of a step can raise the energy by at most the action of
    keeping the previous profile still, which is the regularization cost
    (eps / 2 tau) * dx * sum_j 1 / m(prev_j) summed over all layers.
    """
    grid = config.grid
    samples = sample_potential(config.energy, grid)
    energies = np.array([discrete_energy(config.energy, grid, samples, p)
                         for p in trajectory.profiles])
    violations = np.zeros(max(0, len(trajectory.profiles) - 1))
    for k in range(1, len(trajectory.profiles)):
        prev = trajectory.profiles[k - 1]
        inv_m = 1.0 / mobility_eval(config.mobility, prev)[0]
        slack = (config.eps / (2.0 * config.tau)) * grid.dx * float(np.sum(inv_m))
        violations[k - 1] = energies[k] - energies[k - 1] - slack
    max_violation = float(np.max(violations)) if violations.size else 0.0
    return SlackReport(passed=max_violation <= tolerance,
                       max_violation=max_violation,
                       per_step=violations, tolerance=tolerance)
