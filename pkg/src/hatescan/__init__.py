"""Hate speech detection and target classification toolkit."""

__version__ = "0.1.0"
