"""Desk-scale models of linearized singular Riemannian foliations on Euclidean vector bundles."""

__version__ = "0.1.0"
