"""Experiment drivers turning the stability and error estimates into measurements."""

from .experiments import (
    Forcing, InitialData, UsageError, forcing, initial_data, log_factor, power_iteration_norm,
    resolvent_points, run_convergence_study, run_maxreg_scan, run_monotonicity_check,
    run_projection_bound_check, run_resolvent_scan, run_smoothing_scan, scalar_dg,
)
from .problems import ManufacturedProblem, discrete_steady_1d, get_problem, sin_exp_1d, sin_exp_2d
from .report import Check, ExperimentReport, emit_report

__all__ = [
    "Check", "ExperimentReport", "Forcing", "InitialData", "ManufacturedProblem", "UsageError",
    "discrete_steady_1d", "emit_report", "forcing", "get_problem", "initial_data", "log_factor",
    "power_iteration_norm", "resolvent_points", "run_convergence_study", "run_maxreg_scan",
    "run_monotonicity_check", "run_projection_bound_check", "run_resolvent_scan",
    "run_smoothing_scan", "scalar_dg", "sin_exp_1d", "sin_exp_2d",
]
