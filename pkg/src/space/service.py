"""Dof numbering, essential conditions and interpolation for the mixed space."""

from typing import Callable, Union

import numpy as np
import structlog
from numpy.typing import NDArray

from mesh.schemas import Mesh, Side
from mesh.service import boundary_vertex_sides
from space.schemas import DofMap, EssentialBc, FieldKind, MeanZeroConstraint, MixedSpace

logger = structlog.get_logger(__name__)

ScalarFunction = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.float64]]
VectorFunction = Callable[
    [NDArray[np.float64], NDArray[np.float64]],
    tuple[NDArray[np.float64], NDArray[np.float64]],
]

# normal component constrained on each side: 0 = x, 1 = y
_NORMAL_COMPONENT = {Side.LEFT: 0, Side.RIGHT: 0, Side.BOTTOM: 1, Side.TOP: 1}


def build_dofmap(mesh: Mesh, kind: FieldKind) -> DofMap:
    """Deterministic dof numbering for one field kind."""
    n_vertices = mesh.n_vertices
    if kind is FieldKind.SCALAR_P1:
        cells = mesh.triangles.copy()
        scalar = n_vertices
    else:
        cells = np.hstack([mesh.triangles, n_vertices + mesh.triangle_edges])
        scalar = n_vertices + mesh.n_edges
    if kind is FieldKind.VECTOR_P2:
        cells = np.hstack([cells, cells + scalar])
    cells = cells.astype(np.int64)
    cells.setflags(write=False)
    return DofMap(
        kind=kind,
        cell_dofs=cells,
        n_dofs=scalar * kind.components,
        scalar_dofs=scalar,
    )


def node_coordinates(mesh: Mesh, kind: FieldKind) -> NDArray[np.float64]:
    """Coordinates of the scalar nodes of a field kind (vertices, then midpoints)."""
    if kind is FieldKind.SCALAR_P1:
        return mesh.vertices
    return np.vstack([mesh.vertices, mesh.edge_midpoints()])


def _boundary_nodes(mesh: Mesh) -> dict[int, frozenset[Side]]:
    """Scalar P2 boundary nodes with their sides."""
    nodes = dict(boundary_vertex_sides(mesh))
    for edge, side in zip(mesh.boundary_edges, mesh.boundary_sides):
        nodes[mesh.n_vertices + int(edge)] = frozenset({side})
    return nodes


def essential_bcs(mesh: Mesh, x_map: DofMap, w_map: DofMap) -> tuple[EssentialBc, EssentialBc]:
    """
    Velocity no-slip and magnetic normal-trace constraints.

    Returns:
        (velocity, magnetic): velocity constrains both components at every
        boundary node; magnetic constrains the normal component per side,
        which makes both components fixed at the corners.
    """
    nodes = _boundary_nodes(mesh)
    node_ids = np.array(sorted(nodes), dtype=np.int64)
    velocity = np.concatenate([node_ids, node_ids + x_map.scalar_dofs])

    magnetic: set[int] = set()
    for node, sides in nodes.items():
        for side in sides:
            magnetic.add(node + _NORMAL_COMPONENT[side] * w_map.scalar_dofs)

    return (
        EssentialBc(kind="velocity-no-slip", dofs=np.sort(velocity)),
        EssentialBc(kind="magnetic-normal-trace", dofs=np.array(sorted(magnetic), dtype=np.int64)),
    )


def mean_weights(mesh: Mesh, p1_map: DofMap) -> MeanZeroConstraint:
    """Integrals of the P1 basis functions (row sums of the P1 mass matrix)."""
    areas = mesh.signed_areas()
    weights = np.bincount(
        p1_map.cell_dofs.ravel(),
        weights=np.repeat(areas / 3.0, 3),
        minlength=p1_map.n_dofs,
    )
    return MeanZeroConstraint(weights=weights)


def build_mixed_space(mesh: Mesh) -> MixedSpace:
    """Dof maps and constraints of the P2-P2-P2-P1-P2 space."""
    q_map = build_dofmap(mesh, FieldKind.SCALAR_P2)
    x_map = build_dofmap(mesh, FieldKind.VECTOR_P2)
    m_map = build_dofmap(mesh, FieldKind.SCALAR_P1)
    velocity_bc, magnetic_bc = essential_bcs(mesh, x_map, x_map)
    space = MixedSpace(
        mesh=mesh,
        q_map=q_map,
        x_map=x_map,
        m_map=m_map,
        w_map=x_map,
        velocity_bc=velocity_bc,
        magnetic_bc=magnetic_bc,
        mean=mean_weights(mesh, m_map),
    )
    logger.debug(
        "mixed space built",
        n=mesh.n,
        q_dofs=q_map.n_dofs,
        x_dofs=x_map.n_dofs,
        m_dofs=m_map.n_dofs,
        velocity_constraints=int(velocity_bc.dofs.size),
        magnetic_constraints=int(magnetic_bc.dofs.size),
    )
    return space


def interpolate(
    mesh: Mesh, dofmap: DofMap, f: Union[ScalarFunction, VectorFunction]
) -> NDArray[np.float64]:
    """Nodal interpolation of a scalar or vector function onto a field."""
    nodes = node_coordinates(mesh, dofmap.kind)
    x, y = nodes[:, 0], nodes[:, 1]
    if dofmap.kind is FieldKind.VECTOR_P2:
        fx, fy = f(x, y)  # type: ignore[misc]
        return np.concatenate(
            [np.broadcast_to(fx, x.shape), np.broadcast_to(fy, x.shape)]
        ).astype(float)
    return np.array(np.broadcast_to(f(x, y), x.shape), dtype=float)
