"""Collective three-level (SU(3)) superradiant laser: exact, mean-field and cumulant engines."""

__version__ = "0.1.0"
