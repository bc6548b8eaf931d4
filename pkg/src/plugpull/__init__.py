"""Deterministic simulator and control library for haptic bilateral
teleoperation of an aerial manipulator extracting a wedged plug: nominal-flight
teleoperation, external-wrench estimation, extraction detection, and
autonomous recovery flight, plus a live cockpit bridge."""

from .config import ScenarioConfig, config_from_dict, load_config, make_variant, save_config
from .errors import (
    ConfigError,
    DegenerateThrust,
    DegenerateWindow,
    NumericalDivergence,
    OutOfWindow,
    PlugpullError,
    SingularAttitude,
)
from .metrics import MetricsReport, compute_metrics, read_csv, write_csv
from .sim import SimLog, SimResult, Simulator, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig",
    "config_from_dict",
    "load_config",
    "save_config",
    "make_variant",
    "run_scenario",
    "Simulator",
    "SimLog",
    "SimResult",
    "MetricsReport",
    "compute_metrics",
    "read_csv",
    "write_csv",
    "PlugpullError",
    "ConfigError",
    "SingularAttitude",
    "DegenerateThrust",
    "DegenerateWindow",
    "OutOfWindow",
    "NumericalDivergence",
    "__version__",
]
