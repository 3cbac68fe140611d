"""Verification laboratory for permutation-based SGD on finite-sum quadratics."""

__version__ = "0.1.0"
