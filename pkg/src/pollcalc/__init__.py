"""Exact analysis and simulation of cyclic polling systems with priority classes."""

__version__ = "0.1.0"
