"""Deterministic massive MIMO link-level simulator."""

from . import capacity, channel, errors, numerics, pilots, transceiver
from .numerics import EmpiricalCdf, Seed

__version__ = "0.1.0"

__all__ = [
    "Seed",
    "EmpiricalCdf",
    "capacity",
    "channel",
    "errors",
    "numerics",
    "pilots",
    "transceiver",
    "__version__",
]
