"""Numerical laboratory for Kakeya-type tube arrangements."""
__version__ = "0.1.0"
