"""Phasor-domain grid-forming transition simulator."""

__version__ = "0.1.0"
