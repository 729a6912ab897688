"""Exact and numeric tools for chord fibers of the midpoint map ``(x + y) / 2`` on ``X x Y``."""

__version__ = "0.1.0"
