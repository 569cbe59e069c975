"""Exact spectrum, eigenfunctions and numerical oracles for the hierarchical N = 3^k Calogero model."""

__version__ = "0.1.0"
