"""Chronology-aware e-learning composition engine."""

__version__ = "0.1.0"
