"""Reference-element feature slice: Lagrange bases, quadrature, affine maps."""
