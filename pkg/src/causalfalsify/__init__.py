"""Causality-aided falsification of STL specifications with Gaussian-process surrogates."""

__version__ = "0.1.0"
