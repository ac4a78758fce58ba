"""Verification feature slice: manufactured solutions, energy, errors and rates."""
