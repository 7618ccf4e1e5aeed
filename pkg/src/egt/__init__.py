"""Exact-geodesic optimization of Rayleigh quotients on the unit hypersphere."""

__version__ = "0.1.0"
