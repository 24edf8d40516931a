"""Experiment runner, reporting and CLI."""

from .config import ExperimentConfig, load_config
from .experiments import (
    RunReport,
    complexity_orders,
    complexity_report,
    run_convergence_study,
    run_nmse_sweep,
    single_run,
)
from .report import emit_results, read_results_csv

__all__ = [
    "ExperimentConfig",
    "RunReport",
    "complexity_orders",
    "complexity_report",
    "emit_results",
    "load_config",
    "read_results_csv",
    "run_convergence_study",
    "run_nmse_sweep",
    "single_run",
]
