"""Experiment driver: presets, INI config parsing, CSV output.

Snapshots are written as snap_<step>.csv with columns x,u at cell centers in
full double precision; a sibling index.csv maps step to physical time and
diagnostics.csv collects the per-step scalars.  The config format is strict:
unknown sections or keys are rejected with all violations listed.
"""
from __future__ import annotations

import argparse
import configparser
import os
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np

from . import mobility as mobility_mod
from .energy import (DirichletGradient, DoubleWell, EnergyForm, Entropy,
                     PowerLaw, QuadraticPotential)
from .flow import FlowAbort, FlowConfig, Trajectory, check_energy_slack, run_flow
from .grid import GridSpec
from .solver import SolveFailure, SolveOptions


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


INITIAL_PROFILES = {
    "cos8pi": lambda x: np.cos(8.0 * np.pi * x) + 1.0,
    "halfcos8pi": lambda x: 0.5 * (np.cos(8.0 * np.pi * x) + 1.0),
    "quartic": lambda x: (x - 0.5) ** 4 + 0.001,
}

# section -> key -> converter; the single source of accepted config keys
_SCHEMA: Dict[str, Dict[str, type]] = {
    "experiment": {"preset": str, "steps": int, "snapshot_every": int,
                   "scale": float, "out_dir": str, "seed": int},
    "grid": {"n_dt": int, "n_dx": int},
    "flow": {"tau": float, "eps": float, "clamp_abort_mass": float},
    "mobility": {"kind": str, "mbar": float, "c": float, "alpha": float,
                 "alpha1": float, "alpha2": float, "m_max": float},
    "energy": {"internal": str, "q": float, "potential": str, "a": float,
               "center": float, "gradient": str, "theta": float},
    "initial": {"profile": str, "value": float, "path": str},
    "solver": {"grad_tol_abs": float, "grad_tol_rel": float, "max_iter": int,
               "boundary_fraction": float, "armijo_slope": float,
               "backtrack_factor": float, "damping_init": float,
               "damping_growth": float},
}

# step counts follow the longest time shown for each experiment family
PRESETS: Dict[str, Dict[str, Dict[str, object]]] = {
    "fp-linear": {
        "grid": {"n_dt": 2, "n_dx": 300},
        "flow": {"tau": 1e-4, "eps": 1e-8},
        "mobility": {"kind": "linear", "mbar": 1.0},
        "energy": {"internal": "entropy", "potential": "quadratic",
                   "a": 50.0, "center": 0.5, "gradient": "none"},
        "initial": {"profile": "cos8pi"},
        "experiment": {"steps": 5000, "snapshot_every": 100},
    },
    "fp-porous": {
        "grid": {"n_dt": 2, "n_dx": 300},
        "flow": {"tau": 1e-4, "eps": 1e-8},
        "mobility": {"kind": "linear", "mbar": 1.0},
        "energy": {"internal": "powerlaw", "q": 2.0, "potential": "quadratic",
                   "a": 50.0, "center": 0.5, "gradient": "none"},
        "initial": {"profile": "cos8pi"},
        "experiment": {"steps": 5000, "snapshot_every": 100},
    },
    "cahn-hilliard-a": {
        "grid": {"n_dt": 2, "n_dx": 200},
        "flow": {"tau": 0.06, "eps": 1e-9},
        "mobility": {"kind": "bounded", "c": 1.0, "alpha1": 1.0,
                     "alpha2": 1.0, "m_max": 1.0},
        "energy": {"internal": "doublewell", "potential": "zero",
                   "gradient": "dirichlet", "theta": 0.004},
        "initial": {"profile": "halfcos8pi"},
        "experiment": {"steps": 11000, "snapshot_every": 500},
    },
    "cahn-hilliard-b": {
        "grid": {"n_dt": 2, "n_dx": 200},
        "flow": {"tau": 0.01, "eps": 1e-9},
        "mobility": {"kind": "bounded", "c": 1.0, "alpha1": 1.0,
                     "alpha2": 1.0, "m_max": 1.0},
        "energy": {"internal": "doublewell", "potential": "zero",
                   "gradient": "dirichlet", "theta": 0.001},
        "initial": {"profile": "halfcos8pi"},
        "experiment": {"steps": 10000, "snapshot_every": 500},
    },
    "thin-film": {
        "grid": {"n_dt": 2, "n_dx": 400},
        "flow": {"tau": 1e-5, "eps": 1e-12},
        "mobility": {"kind": "linear", "mbar": 1.0},
        "energy": {"internal": "none", "potential": "zero",
                   "gradient": "dirichlet", "theta": 1.0},
        "initial": {"profile": "quartic"},
        "experiment": {"steps": 4000, "snapshot_every": 100},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    preset: Optional[str]
    n_dt: int
    n_dx: int
    tau: float
    eps: float
    mobility: mobility_mod.MobilitySpec
    energy: EnergyForm
    initial: object
    initial_name: str
    steps: int
    snapshot_every: int
    scale: float
    out_dir: str
    seed: int
    solve_options: SolveOptions
    clamp_abort_mass: float
    check: bool = False


def _merge_settings(base: Dict[str, Dict[str, object]],
                    extra: Dict[str, Dict[str, object]]) -> None:
    for section, keys in extra.items():
        base.setdefault(section, {}).update(keys)


def _read_ini(path: str) -> Dict[str, Dict[str, object]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    settings: Dict[str, Dict[str, object]] = {}
    problems = []
    for section in parser.sections():
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            conv = _SCHEMA[section].get(key)
            if conv is None:
                problems.append(f"unknown key {section}.{key}")
                continue
            try:
                settings.setdefault(section, {})[key] = conv(raw)
            except ValueError:
                problems.append(f"bad value for {section}.{key}: {raw!r}")
    if problems:
        raise ConfigError("config rejected:\n  " + "\n  ".join(problems))
    return settings


def _build_mobility(opts: Dict[str, object], problems) -> Optional[mobility_mod.MobilitySpec]:
    kind = opts.get("kind")
    try:
        if kind == "linear":
            return mobility_mod.linear(float(opts.get("mbar", 1.0)))
        if kind == "power":
            return mobility_mod.power(float(opts["c"]), float(opts["alpha"]))
        if kind == "bounded":
            return mobility_mod.bounded_support(
                float(opts["c"]), float(opts["alpha1"]),
                float(opts["alpha2"]), float(opts["m_max"]))
    except KeyError as exc:
        problems.append(f"mobility.{exc.args[0]} missing for kind {kind!r}")
        return None
    except ValueError as exc:
        problems.append(f"mobility: {exc}")
        return None
    problems.append(f"mobility.kind must be linear, power or bounded, got {kind!r}")
    return None


def _build_energy(opts: Dict[str, object], problems) -> Optional[EnergyForm]:
    internal = opts.get("internal", "none")
    potential = opts.get("potential", "zero")
    gradient = opts.get("gradient", "none")
    try:
        if internal == "none":
            ipart = None
        elif internal == "entropy":
            ipart = Entropy()
        elif internal == "powerlaw":
            ipart = PowerLaw(float(opts["q"]))
        elif internal == "doublewell":
            ipart = DoubleWell()
        else:
            problems.append(f"energy.internal unknown: {internal!r}")
            return None
        if potential == "zero":
            vpart = None
        elif potential == "quadratic":
            vpart = QuadraticPotential(float(opts["a"]), float(opts.get("center", 0.5)))
        else:
            problems.append(f"energy.potential unknown: {potential!r}")
            return None
        if gradient == "none":
            gpart = None
        elif gradient == "dirichlet":
            gpart = DirichletGradient(float(opts["theta"]))
        else:
            problems.append(f"energy.gradient unknown: {gradient!r}")
            return None
    except KeyError as exc:
        problems.append(f"energy.{exc.args[0]} required by the chosen form")
        return None
    except ValueError as exc:
        problems.append(f"energy: {exc}")
        return None
    return EnergyForm(internal=ipart, potential=vpart, gradient=gpart)


def _build_initial(opts: Dict[str, object], problems):
    name = opts.get("profile")
    if name in INITIAL_PROFILES:
        return INITIAL_PROFILES[name], name
    if name == "constant":
        value = float(opts.get("value", 1.0))
        return (lambda x: np.full_like(np.asarray(x, dtype=float), value)), name
    if name == "table":
        path = opts.get("path")
        if not path:
            problems.append("initial.path required for profile = table")
            return None, name
        try:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except OSError as exc:
            problems.append(f"initial.path unreadable: {exc}")
            return None, name
        if data.shape[1] != 2:
            problems.append("initial table must have two columns x,u")
            return None, name
        return (data[:, 0], data[:, 1]), name
    problems.append(
        f"initial.profile must be one of {sorted(INITIAL_PROFILES)}, "
        f"'constant' or 'table', got {name!r}")
    return None, str(name)


def resolve_settings(settings: Dict[str, Dict[str, object]],
                     check: bool = False) -> ExperimentConfig:
    """Turn merged raw settings into a validated ExperimentConfig."""
    problems = []
    exp = settings.get("experiment", {})
    grid_s = settings.get("grid", {})
    flow_s = settings.get("flow", {})
    for key in ("n_dt", "n_dx"):
        if key not in grid_s:
            problems.append(f"grid.{key} missing")
    for key in ("tau", "eps"):
        if key not in flow_s:
            problems.append(f"flow.{key} missing")
    if "steps" not in exp:
        problems.append("experiment.steps missing")
    mobility = _build_mobility(settings.get("mobility", {}), problems)
    form = _build_energy(settings.get("energy", {}), problems)
    initial, initial_name = _build_initial(settings.get("initial", {}), problems)
    scale = float(exp.get("scale", 1.0))
    if scale < 1.0:
        problems.append("experiment.scale must be >= 1")
    solver_s = settings.get("solver", {})
    try:
        solve_options = SolveOptions(**solver_s)
    except (TypeError, ValueError) as exc:
        problems.append(f"solver options: {exc}")
        solve_options = SolveOptions()
    if problems:
        raise ConfigError("config rejected:\n  " + "\n  ".join(problems))
    return ExperimentConfig(
        preset=exp.get("preset"),
        n_dt=int(grid_s["n_dt"]), n_dx=int(grid_s["n_dx"]),
        tau=float(flow_s["tau"]), eps=float(flow_s["eps"]),
        mobility=mobility, energy=form, initial=initial,
        initial_name=initial_name,
        steps=int(exp["steps"]),
        snapshot_every=int(exp.get("snapshot_every", 1)),
        scale=scale,
        out_dir=str(exp.get("out_dir", "out")),
        seed=int(exp.get("seed", 0)),
        solve_options=solve_options,
        clamp_abort_mass=float(flow_s.get("clamp_abort_mass", 1e-6)),
        check=check)


def parse_config(source: str, check: bool = False) -> ExperimentConfig:
    """Load an ExperimentConfig from a preset name or an INI file path."""
    settings: Dict[str, Dict[str, object]] = {}
    if source in PRESETS:
        _merge_settings(settings, PRESETS[source])
        settings.setdefault("experiment", {})["preset"] = source
        return resolve_settings(settings, check=check)
    if not os.path.exists(source):
        raise ConfigError(
            f"{source!r} is neither a preset nor a config file; presets: "
            + ", ".join(sorted(PRESETS)))
    file_settings = _read_ini(source)
    preset = file_settings.get("experiment", {}).get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; presets: "
                              + ", ".join(sorted(PRESETS)))
        _merge_settings(settings, PRESETS[preset])
    _merge_settings(settings, file_settings)
    return resolve_settings(settings, check=check)


def scaled_resolution(config: ExperimentConfig) -> tuple:
    """Desk-scale reduction: divide the cell count, stretch the time step."""
    n_dx = max(1, round(config.n_dx / config.scale))
    return n_dx, config.tau * config.scale


def _format_row(values) -> str:
    return ",".join(f"{v:.17g}" for v in values)


def write_snapshot_csv(profile: np.ndarray, grid: GridSpec, t: float,
                       path: str) -> None:
    """Write one density profile at cell centers; time lives in index.csv."""
    if t < 0.0:
        raise ValueError("snapshot time must be nonnegative")
    profile = np.asarray(profile, dtype=float)
    if profile.shape != (grid.n_dx,):
        raise ValueError("profile does not match the grid")
    centers = grid.cell_centers()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,u\n")
        for x, u in zip(centers, profile):
            fh.write(_format_row((x, u)) + "\n")


def read_snapshot_csv(path: str):
    """Inverse of write_snapshot_csv; returns (x, u) arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns x,u")
    return data[:, 0], data[:, 1]


def _write_diagnostics(trajectory: Trajectory, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,time,mass,energy,action,newton_iters,grad_norm,clamped_mass\n")
        for k, diag in enumerate(trajectory.diagnostics):
            fh.write(f"{k},{_format_row((trajectory.times[k], diag.mass, diag.energy, diag.action))}"
                     f",{diag.newton_iters},{_format_row((diag.grad_norm, diag.clamped_mass))}\n")


def _snapshot_steps(steps: int, every: int):
    marks = sorted(set(range(0, steps + 1, every)) | {steps})
    return marks


def _run_checks(config: ExperimentConfig, flow_config: FlowConfig,
                trajectory: Trajectory, out_dir: str) -> bool:
    ok = True
    masses = np.array([d.mass for d in trajectory.diagnostics])
    drift = float(np.max(np.abs(masses - masses[0]))) / max(1e-300, abs(masses[0]))
    good = drift <= 1e-12
    print(f"check: mass conservation {'PASS' if good else 'FAIL'} "
          f"(max relative drift {drift:.3e})")
    ok &= good
    report = check_energy_slack(trajectory, flow_config)
    print(f"check: energy descent {'PASS' if report.passed else 'FAIL'} "
          f"(max violation {report.max_violation:.3e})")
    ok &= report.passed
    grid = flow_config.grid
    round_trip = True
    for k in _snapshot_steps(trajectory.steps, config.snapshot_every):
        xs, us = read_snapshot_csv(os.path.join(out_dir, f"snap_{k:06d}.csv"))
        if not (np.array_equal(us, trajectory.profiles[k])
                and np.array_equal(xs, grid.cell_centers())):
            round_trip = False
    print(f"check: snapshot round trip {'PASS' if round_trip else 'FAIL'}")
    ok &= round_trip
    return bool(ok)


def run_experiment(config: ExperimentConfig) -> int:
    """Run one configured experiment; returns a process exit status."""
    n_dx, tau = scaled_resolution(config)
    grid = GridSpec(n_dt=config.n_dt, n_dx=n_dx)
    flow_config = FlowConfig(tau=tau, steps=config.steps, eps=config.eps,
                             grid=grid, mobility=config.mobility,
                             energy=config.energy,
                             snapshot_every=config.snapshot_every,
                             solve_options=config.solve_options,
                             clamp_abort_mass=config.clamp_abort_mass)
    try:
        os.makedirs(config.out_dir, exist_ok=True)
        trajectory = run_flow(flow_config, config.initial)
    except (FlowAbort, SolveFailure, ValueError, OSError) as exc:
        print(f"error: {exc}")
        return 1
    try:
        _write_diagnostics(trajectory, os.path.join(config.out_dir, "diagnostics.csv"))
        with open(os.path.join(config.out_dir, "index.csv"), "w",
                  encoding="utf-8", newline="\n") as fh:
            fh.write("step,time\n")
            for k in _snapshot_steps(config.steps, config.snapshot_every):
                fh.write(f"{k},{trajectory.times[k]:.17g}\n")
                write_snapshot_csv(trajectory.profiles[k], grid,
                                   trajectory.times[k],
                                   os.path.join(config.out_dir, f"snap_{k:06d}.csv"))
                diag = trajectory.diagnostics[k]
                print(f"step {k:6d} t={trajectory.times[k]:.6g} "
                      f"mass={diag.mass:.12g} energy={diag.energy:.12g}")
    except OSError as exc:
        print(f"error: {exc}")
        return 1
    if config.check and not _run_checks(config, flow_config, trajectory,
                                        config.out_dir):
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wgflow",
        description="Variational solver for 1-D gradient flows with "
                    "nonlinear mobility")
    parser.add_argument("--preset", help="named experiment preset")
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--out-dir", help="output directory for CSV files")
    parser.add_argument("--steps", type=int, help="number of outer steps")
    parser.add_argument("--snapshot-every", type=int,
                        help="write a snapshot every N steps")
    parser.add_argument("--scale", type=float,
                        help="desk-scale factor: divides cells, multiplies tau")
    parser.add_argument("--list-presets", action="store_true",
                        help="list preset names and exit")
    parser.add_argument("--check", action="store_true",
                        help="verify invariants of the finished run")
    args = parser.parse_args(argv)

    if args.list_presets:
        for name in sorted(PRESETS):
            exp = PRESETS[name]
            print(f"{name}: n_dx={exp['grid']['n_dx']}, tau={exp['flow']['tau']}, "
                  f"steps={exp['experiment']['steps']}")
        return 0
    if args.preset is None and args.config is None:
        print("error: need --preset or --config; presets: "
              + ", ".join(sorted(PRESETS)))
        return 2
    if args.preset is not None and args.preset not in PRESETS:
        print(f"error: unknown preset {args.preset!r}; presets: "
              + ", ".join(sorted(PRESETS)))
        return 2
    try:
        if args.config is not None:
            if args.preset is not None:
                settings = _read_ini(args.config)
                merged: Dict[str, Dict[str, object]] = {}
                _merge_settings(merged, PRESETS[args.preset])
                _merge_settings(merged, settings)
                merged.setdefault("experiment", {})["preset"] = args.preset
                config = resolve_settings(merged, check=args.check)
            else:
                config = parse_config(args.config, check=args.check)
        else:
            config = parse_config(args.preset, check=args.check)
    except ConfigError as exc:
        print(f"error: {exc}")
        return 2
    overrides = {}
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.snapshot_every is not None:
        overrides["snapshot_every"] = args.snapshot_every
    if args.scale is not None:
        if args.scale < 1.0:
            print("error: --scale must be >= 1")
            return 2
        overrides["scale"] = args.scale
    if overrides:
        config = replace(config, **overrides)
    return run_experiment(config)


if __name__ == "__main__":
    raise SystemExit(main())
