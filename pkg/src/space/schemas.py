"""Degree-of-freedom maps and constraint types"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from mesh.schemas import Mesh


class FieldKind(str, Enum):
    """Finite element field kinds of the mixed space."""

    SCALAR_P1 = "scalar-P1"
    SCALAR_P2 = "scalar-P2"
    VECTOR_P2 = "vector-P2"

    @property
    def degree(self) -> int:
        return 1 if self is FieldKind.SCALAR_P1 else 2

    @property
    def components(self) -> int:
        return 2 if self is FieldKind.VECTOR_P2 else 1


@dataclass(frozen=True)
class DofMap:
    """
    Global numbering of one field.

    Scalar dofs are numbered vertices first, then edge midpoints (P2).
    Vector fields are component-major: all x dofs, then all y dofs.

    Attributes:
        kind: Field kind
        cell_dofs: (F, n_local) local-to-global table; for vector fields the
            first half of the columns are x-component dofs
        n_dofs: Total dof count
        scalar_dofs: Dofs per component
    """

    kind: FieldKind
    cell_dofs: NDArray[np.int64]
    n_dofs: int
    scalar_dofs: int

    @property
    def local_size(self) -> int:
        return int(self.cell_dofs.shape[1])


@dataclass(frozen=True)
class EssentialBc:
    """Homogeneous Dirichlet-type constraints on field-local dofs."""

    kind: str
    dofs: NDArray[np.int64]

    @property
    def values(self) -> NDArray[np.float64]:
        return np.zeros(self.dofs.shape[0])


@dataclass(frozen=True)
class MeanZeroConstraint:
    """Weights w with w^T p equal to the integral of the P1 field p."""

    weights: NDArray[np.float64]

    def mean(self, p: NDArray[np.float64]) -> float:
        return float(self.weights @ p)


@dataclass(frozen=True)
class MixedSpace:
    """Q_h x Q_h x X_h x M_h x W_h on one mesh with their constraints."""

    mesh: Mesh
    q_map: DofMap
    x_map: DofMap
    m_map: DofMap
    w_map: DofMap
    velocity_bc: EssentialBc
    magnetic_bc: EssentialBc
    mean: MeanZeroConstraint

    @property
    def sizes(self) -> dict[str, int]:
        return {
            "phi": self.q_map.n_dofs,
            "mu": self.q_map.n_dofs,
            "u": self.x_map.n_dofs,
            "p": self.m_map.n_dofs,
            "B": self.w_map.n_dofs,
        }
