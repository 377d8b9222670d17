"""Multiuser mmWave downlink simulator and joint beam/power allocation solver."""

from ._kernels import HAVE_COMPILED, IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .config import ScenarioConfig

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED",
    "KERNEL_IMPLEMENTATION",
    "ScenarioConfig",
    "__version__",
]
