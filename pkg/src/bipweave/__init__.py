"""Aspect weaving for component models built from guarded transition systems."""

__version__ = "0.1.0"
