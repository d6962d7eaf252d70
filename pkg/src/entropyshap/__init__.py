"""Shapley attributions for predictive uncertainty."""

__version__ = "0.1.0"
