"""Quadratic variation norms, variation measures, measure synthesis and dyadic-tree tools on [0, 1]."""

__version__ = "0.1.0"
