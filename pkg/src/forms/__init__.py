"""Variational forms feature slice: matrices and load vectors of the scheme."""
