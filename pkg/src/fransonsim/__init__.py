"""Simulator of dispersion cancellation for frequency-entangled photon pairs."""

__version__ = "0.1.0"
