"""Desk-scale numerics for symmetric random walks on surface and free groups."""

__version__ = "0.1.0"
