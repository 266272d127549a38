"""Rigidity of operators on weighted finite-dimensional Hilbert spaces."""

__version__ = "0.1.0"
