"""Solvability analysis and control regularization for impulsive integro-differential BVPs."""

__version__ = "1.0.0"
