"""Attribute recombination for composing chess mate-in-3 problems."""

__version__ = "0.1.0"
