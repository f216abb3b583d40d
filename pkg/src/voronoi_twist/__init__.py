"""Voronoi summation, Bessel kernels and additively twisted coefficient sums."""

__version__ = "0.1.0"
