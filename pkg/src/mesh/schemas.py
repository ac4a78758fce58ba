"""Mesh data types"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray


class Side(str, Enum):
    """Sides of the unit square."""

    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


@dataclass(frozen=True)
class Mesh:
    """
    Conforming triangulation of the unit square.

    Attributes:
        vertices: (V, 2) coordinates
        triangles: (F, 3) vertex indices, counter-clockwise
        edges: (E, 2) vertex indices with edges[:, 0] < edges[:, 1]
        triangle_edges: (F, 3) edge index of local edges (0,1), (1,2), (2,0)
        edge_triangles: (E, 2) adjacent triangles, -1 where absent
        boundary_edges: indices into ``edges`` of edges on the boundary
        boundary_sides: side of each entry of ``boundary_edges``
        h: mesh size 1/n
        n: cells per axis
    """

    vertices: NDArray[np.float64]
    triangles: NDArray[np.int64]
    edges: NDArray[np.int64]
    triangle_edges: NDArray[np.int64]
    edge_triangles: NDArray[np.int64]
    boundary_edges: NDArray[np.int64]
    boundary_sides: tuple[Side, ...]
    h: float
    n: int

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def edge_midpoints(self) -> NDArray[np.float64]:
        """Midpoints of all edges, computed from the endpoints."""
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def signed_areas(self) -> NDArray[np.float64]:
        p0 = self.vertices[self.triangles[:, 0]]
        p1 = self.vertices[self.triangles[:, 1]]
        p2 = self.vertices[self.triangles[:, 2]]
        e1 = p1 - p0
        e2 = p2 - p0
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
