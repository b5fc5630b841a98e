"""Cascade reconstruction, structural-diversity measures and viral prediction."""

__version__ = "0.1.0"
