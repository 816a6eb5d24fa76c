"""Numerics for the matrix-model limit of noncommutative phi^4 in four dimensions."""

__version__ = "0.1.0"
