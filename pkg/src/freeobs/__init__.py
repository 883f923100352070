"""Stochastic bandits with free observations: simulation, policies and
regret bounds."""

__version__ = "0.1.0"
