"""Linear algebra feature slice: sparse patterns, LU solves, block systems."""
