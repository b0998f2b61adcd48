"""Ratio-form Bell inequality toolkit for two-channel cascade-photon experiments."""

__version__ = "0.1.0"
