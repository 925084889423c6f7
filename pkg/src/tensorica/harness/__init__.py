"""Experiment orchestration: configs, replicated runs, sweeps, CSV output and the CLI."""

from .config import ExperimentConfig, load_config
from .experiment import (
    ExperimentResult,
    ScalingPoint,
    ScalingSummary,
    emit_plot_data,
    fit_loglog,
    run_experiment,
    scaling_sweep,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ScalingPoint",
    "ScalingSummary",
    "emit_plot_data",
    "fit_loglog",
    "load_config",
    "run_experiment",
    "scaling_sweep",
]
