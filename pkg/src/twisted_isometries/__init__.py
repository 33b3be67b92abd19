"""Twisted isometry tuples on truncated Hardy spaces: relations, Wold decomposition, models."""

__version__ = "0.1.0"
