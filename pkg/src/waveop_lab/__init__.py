"""Numerical checks for low-energy wave-operator kernels of Delta^2 + V on R^3."""

from .config import Config, default_config, load_config
from .experiments import run_suite

__version__ = "0.1.0"

__all__ = ["Config", "default_config", "load_config", "run_suite", "__version__"]
