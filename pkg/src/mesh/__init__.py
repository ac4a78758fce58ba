"""Mesh feature slice: unit-square triangulations and boundary tagging."""
