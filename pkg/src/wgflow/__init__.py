"""Fully discrete variational solver for 1-D gradient flows with nonlinear mobility."""

from .mobility import (ActionParams, MobilitySpec, action_density,
                       action_grad_hess, bounded_support, custom, linear,
                       mobility_eval, power, recession, validate_mobility)
from .energy import (CustomGradient, CustomInternal, DirichletGradient,
                     DoubleWell, EnergyForm, Entropy, PotentialSamples,
                     PowerLaw, QuadraticPotential, TablePotential,
                     discrete_energy, discrete_energy_grad_hess,
                     sample_potential)
from .grid import (GridSpec, StepState, ce_residual, cell_average,
                   deregularize, march_density, regularize_initial)
from .solver import (DistanceResult, MassMismatchError, ObjectiveSpec,
                     SolveFailure, SolveOptions, SolveResult,
                     estimate_distance, objective_eval, objective_grad,
                     objective_hess, solve_step)
from .flow import (FlowAbort, FlowConfig, SlackReport, StepDiagnostics,
                   Trajectory, check_energy_slack, interpolate_pwc, run_flow)
from .cli import (ConfigError, ExperimentConfig, PRESETS, parse_config,
                  read_snapshot_csv, run_experiment, write_snapshot_csv)

__version__ = "0.1.0"

__all__ = [
    "ActionParams", "MobilitySpec", "action_density", "action_grad_hess",
    "bounded_support", "custom", "linear", "mobility_eval", "power",
    "recession", "validate_mobility",
    "CustomGradient", "CustomInternal", "DirichletGradient", "DoubleWell",
    "EnergyForm", "Entropy", "PotentialSamples", "PowerLaw",
    "QuadraticPotential", "TablePotential", "discrete_energy",
    "discrete_energy_grad_hess", "sample_potential",
    "GridSpec", "StepState", "ce_residual", "cell_average", "deregularize",
    "march_density", "regularize_initial",
    "DistanceResult", "MassMismatchError", "ObjectiveSpec", "SolveFailure",
    "SolveOptions", "SolveResult", "estimate_distance", "objective_eval",
    "objective_grad", "objective_hess", "solve_step",
    "FlowAbort", "FlowConfig", "SlackReport", "StepDiagnostics", "Trajectory",
    "check_energy_slack", "interpolate_pwc", "run_flow",
    "ConfigError", "ExperimentConfig", "PRESETS", "parse_config",
    "read_snapshot_csv", "run_experiment", "write_snapshot_csv",
]
