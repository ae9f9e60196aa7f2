"""Configuration-driven Monte Carlo harness."""

from .calibrate import calibrate_constant, fit_constant, run_calibration
from .config import ExperimentConfig, load_config, resolve
from .experiment import run_experiment, run_replicates
from .sweep import run_regime_sweep

__all__ = [
    "ExperimentConfig", "calibrate_constant", "fit_constant", "load_config", "resolve",
    "run_calibration", "run_experiment", "run_regime_sweep", "run_replicates",
]
