"""Capacity scaling of single- and multi-tier hexagonal wireless mesh networks."""

__version__ = "0.1.0"
