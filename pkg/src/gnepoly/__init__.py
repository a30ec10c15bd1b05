"""Convex generalized Nash equilibrium solver for polynomial games."""

__version__ = "0.1.0"
