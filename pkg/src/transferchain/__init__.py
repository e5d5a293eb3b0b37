"""Payer/receiver transition analysis: independence test, Markov chain, simulation."""

__version__ = "0.1.0"
