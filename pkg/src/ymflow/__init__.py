"""Desk-scale numerics and tree combinatorics for the 2D stochastic Yang-Mills flow."""

__version__ = "0.1.0"
