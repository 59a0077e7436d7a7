"""Smooth circle maps with flat intervals and wandering intervals."""

__version__ = "0.1.0"
