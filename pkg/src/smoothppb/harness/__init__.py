"""Configuration-driven simulation studies."""
from .config import ConfigError, MethodSpec, PopulationSpec, StudyConfig, load_config
from .report import emit_report, read_metrics
from .study import StudyReport, approximate_true_mse, run_study

__all__ = [
    "ConfigError",
    "MethodSpec",
    "PopulationSpec",
    "StudyConfig",
    "StudyReport",
    "approximate_true_mse",
    "emit_report",
    "load_config",
    "read_metrics",
    "run_study",
]
