"""Spectral factorization on the unit circle and continuity bounds for factors."""

__version__ = "0.1.0"
