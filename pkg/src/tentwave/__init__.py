"""Tent-pitching space-time solver for the 1D linear wave equation."""

__version__ = "0.1.0"
