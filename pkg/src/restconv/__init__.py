"""Spectral toolkit for restricted-convolution inequalities on affine subspaces."""

__version__ = "0.1.0"
