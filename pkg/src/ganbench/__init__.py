"""Synthetic benchmarks and geometric capability metrics for GANs."""

__version__ = "0.1.0"
