"""Robust congested partial set covering location with Benders decomposition."""

from .instance import Instance, Mode, RobustConfig, generate, load, save, validate

__all__ = ["Instance", "Mode", "RobustConfig", "generate", "load", "save", "validate"]
__version__ = "0.1.0"
