"""Symplectic thickening of pre-symplectic systems and the degenerate Lagrangians it yields."""

__version__ = "0.1.0"
