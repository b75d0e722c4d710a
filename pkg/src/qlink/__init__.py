"""Coincidence statistics and key-rate working points for frequency-multiplexed
entangled photon pair links."""

__version__ = "0.1.0"
