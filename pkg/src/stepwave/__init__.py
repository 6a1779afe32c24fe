"""Floquet spectral analysis and breather computation for 1D wave equations
with piecewise-constant, perturbed-periodic coefficients."""

__version__ = "0.1.0"
