"""Determinant identities, Petri relations and Siegel-metric formulas for canonical curves."""

__version__ = "0.1.0"
