"""Negative multiplicative drift workbench for non-elitist population processes."""

__version__ = "0.1.0"
