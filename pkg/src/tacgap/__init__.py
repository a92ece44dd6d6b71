"""Airy-kernel and tacnode gap probabilities as Fredholm determinants."""

__version__ = "0.1.0"
