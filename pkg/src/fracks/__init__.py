"""Exact and space-fractional Kohn-Sham potentials for a dephasing two-level electron."""

__version__ = "0.1.0"

from .config import SimulationConfig, load_config, parse_config_text
from .errors import ConfigError, FracksError, UnrepairableSingularityError
from .fractional_kernel import PowerBranchMode, gamma_fn, mittag_leffler
from .pipeline import simulate, sweep

__all__ = [
    "__version__",
    "ConfigError",
    "FracksError",
    "PowerBranchMode",
    "SimulationConfig",
    "UnrepairableSingularityError",
    "gamma_fn",
    "load_config",
    "mittag_leffler",
    "parse_config_text",
    "simulate",
    "sweep",
]
