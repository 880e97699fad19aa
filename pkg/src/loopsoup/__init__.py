"""Simulation and verification of one-dimensional loop soups."""

__version__ = "0.1.0"
