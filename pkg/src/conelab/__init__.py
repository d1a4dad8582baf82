"""Numerical laboratory for cone-type Fourier multipliers with non-radial gauges."""

__version__ = "0.1.0"
