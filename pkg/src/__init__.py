"""Exact filtering, likelihood, decoding and fitting for the noise plus mother-cluster point process."""

__version__ = "0.1.0"
