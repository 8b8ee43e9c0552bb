"""Pseudorandom-state encryption of generative-model training data, simulated exactly."""

__version__ = "0.1.0"
