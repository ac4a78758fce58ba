"""Reference element, quadrature and affine map types"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class ReferenceElement:
    """
    Lagrange element on the unit triangle (0,0), (1,0), (0,1).

    P2 nodes are ordered as the three vertices followed by the midpoints of
    edges (0,1), (1,2), (2,0).
    """

    degree: int
    nodes: NDArray[np.float64]

    @property
    def node_count(self) -> int:
        return int(self.nodes.shape[0])


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on the reference triangle; weights sum to 1/2."""

    degree: int
    points: NDArray[np.float64]
    weights: NDArray[np.float64]

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class AffineMap:
    """
    Per-triangle affine maps x = J xi + x0.

    Attributes:
        jacobian: (F, 2, 2)
        inverse_transpose: (F, 2, 2)
        det: (F,) |det J|, twice the triangle area
        origin: (F, 2) image of the reference origin
    """

    jacobian: NDArray[np.float64]
    inverse_transpose: NDArray[np.float64]
    det: NDArray[np.float64]
    origin: NDArray[np.float64]

    def to_physical(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        """Map reference points (Q, 2) to physical points (F, Q, 2)."""
        return np.einsum("fij,qj->fqi", self.jacobian, points) + self.origin[:, None, :]
