"""Structured triangulations of the unit square."""

import numpy as np
import structlog

from mesh.schemas import Mesh, Side
from shared.exceptions import MeshError

logger = structlog.get_logger(__name__)

# Local edges of a triangle, ordered to match the P2 edge nodes.
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def _freeze(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


def unit_square_mesh(n: int) -> Mesh:
    """
    Build the uniform triangulation of [0, 1]^2 with n cells per axis.

    Every grid cell is split along its lower-left to upper-right diagonal.

    Args:
        n: Number of cells per axis

    Returns:
        Mesh with (n+1)^2 vertices and 2n^2 triangles

    Raises:
        MeshError: If n < 1
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise MeshError(f"mesh resolution must be a positive integer, got {n!r}")
    n = int(n)

    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    # interleave so the two triangles of a cell are adjacent in memory
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    local = np.stack([triangles[:, [a, b]] for a, b in LOCAL_EDGES], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    triangle_edges = inverse.reshape(-1, 3).astype(np.int64)

    edge_triangles = np.full((edges.shape[0], 2), -1, dtype=np.int64)
    owner = np.repeat(np.arange(triangles.shape[0]), 3)
    flat = triangle_edges.ravel()
    for slot_edge, tri in zip(flat, owner):
        slot = 0 if edge_triangles[slot_edge, 0] < 0 else 1
        edge_triangles[slot_edge, slot] = tri

    boundary = np.flatnonzero(edge_triangles[:, 1] < 0)
    sides = tuple(_edge_side(vertices[edges[e]]) for e in boundary)

    edges = edges.astype(np.int64)
    _freeze(vertices, triangles, edges, triangle_edges, edge_triangles, boundary)
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        triangle_edges=triangle_edges,
        edge_triangles=edge_triangles,
        boundary_edges=boundary,
        boundary_sides=sides,
        h=1.0 / n,
        n=n,
    )
    logger.debug(
        "mesh built",
        n=n,
        vertices=mesh.n_vertices,
        triangles=mesh.n_triangles,
        edges=mesh.n_edges,
    )
    return mesh


def _edge_side(endpoints: np.ndarray) -> Side:
    x, y = endpoints[:, 0], endpoints[:, 1]
    if np.all(x == 0.0):
        return Side.LEFT
    if np.all(x == 1.0):
        return Side.RIGHT
    if np.all(y == 0.0):
        return Side.BOTTOM
    if np.all(y == 1.0):
        return Side.TOP
    raise MeshError(f"boundary edge {endpoints.tolist()} is not on a side of the square")


def boundary_vertex_sides(mesh: Mesh) -> dict[int, frozenset[Side]]:
    """
    Tag every boundary vertex with the sides it lies on.

    Corners carry two tags; interior vertices are absent from the map.
    """
    x = mesh.vertices[:, 0]
    y = mesh.vertices[:, 1]
    tags: dict[int, frozenset[Side]] = {}
    for side, mask in (
        (Side.LEFT, x == 0.0),
        (Side.RIGHT, x == 1.0),
        (Side.BOTTOM, y == 0.0),
        (Side.TOP, y == 1.0),
    ):
        for k in np.flatnonzero(mask):
            tags[int(k)] = tags.get(int(k), frozenset()) | {side}
    return dict(sorted(tags.items()))
