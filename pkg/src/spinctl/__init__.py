"""Optimal control tools for finite-dimensional spin systems."""

__version__ = "0.1.0"
