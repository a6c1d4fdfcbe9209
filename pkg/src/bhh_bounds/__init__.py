"""Numerical and Monte Carlo checks of two-nearest-neighbor lower bounds on the Euclidean TSP constant."""

__version__ = "0.1.0"
