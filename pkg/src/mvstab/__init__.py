"""Stability analysis and simulation of stationary states of 1-D mean-field SDEs."""

__version__ = "0.1.0"
