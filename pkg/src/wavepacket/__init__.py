"""Numerics for wave packet frequency coverings, the function-space
quasi-norms built on them, embedding decisions, and the discrete wave
packet frame transform."""

__version__ = "0.1.0"
