"""
Shared utilities and components.

This package contains cross-cutting concerns (settings, logging, errors)
used across the solver's feature slices.
"""
