"""Symbolic-numeric verification toolkit for coupled Painleve II systems in dimension four."""

__version__ = "0.1.0"
