"""Numerical trace and index formulas for Dirac-Schroedinger operators with
finite-dimensional Hermitian matrix potentials on odd-dimensional R^d."""

__version__ = "0.1.0"
