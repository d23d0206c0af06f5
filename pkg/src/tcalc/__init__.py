"""Symbolic tensor calculus for divergence and ambient-metric identities."""
__version__ = "0.1.0"
