"""Substitution dynamics, Rauzy fractals and coincidence checks for Pisot substitutions."""

__version__ = "0.1.0"
