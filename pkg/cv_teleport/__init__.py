"""Continuous-variable quantum teleportation simulator and metrics toolkit."""

__version__ = "0.1.0"
