"""Function-space feature slice: dof maps, boundary constraints, interpolation."""
