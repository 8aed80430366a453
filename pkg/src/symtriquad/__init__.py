"""Symmetric triangle quadrature for singular function sequences."""
