"""Bilayers and undulated bilayers of the planar functionalized Cahn-Hilliard equation."""

__version__ = "0.1.0"
