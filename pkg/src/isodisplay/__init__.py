"""Finite-dimensional renormings whose isometry group is a prescribed finite group."""

__version__ = "0.1.0"
