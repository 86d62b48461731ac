"""Deterministic simulator and property checker for transferable cross-chain swap options."""

__version__ = "0.1.0"
