"""Lagrange bases on the reference triangle and affine element maps."""

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from fem_basis.schemas import AffineMap, ReferenceElement
from mesh.schemas import Mesh
from shared.exceptions import DegenerateElementError

# gradients of the barycentric coordinates in reference coordinates
_BARY_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_P2_EDGES = ((0, 1), (1, 2), (2, 0))


@lru_cache(maxsize=None)
def reference_element(degree: int) -> ReferenceElement:
    """P1 or P2 Lagrange element."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    if degree == 1:
        return ReferenceElement(degree=1, nodes=vertices)
    if degree == 2:
        midpoints = np.array([0.5 * (vertices[a] + vertices[b]) for a, b in _P2_EDGES])
        return ReferenceElement(degree=2, nodes=np.vstack([vertices, midpoints]))
    raise ValueError(f"unsupported element degree {degree}")


def eval_basis(
    element: ReferenceElement, points: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Evaluate shape functions and their reference gradients.

    Args:
        element: Reference element
        points: (2,) or (Q, 2) reference coordinates

    Returns:
        values (Q, n) and gradients (Q, n, 2); a single point drops the Q axis
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    lam = np.column_stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]])
    nq = pts.shape[0]

    if element.degree == 1:
        values = lam
        grads = np.broadcast_to(_BARY_GRAD, (nq, 3, 2)).copy()
    else:
        values = np.empty((nq, 6))
        grads = np.empty((nq, 6, 2))
        for i in range(3):
            values[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
            grads[:, i, :] = (4.0 * lam[:, i] - 1.0)[:, None] * _BARY_GRAD[i]
        for k, (a, b) in enumerate(_P2_EDGES):
            values[:, 3 + k] = 4.0 * lam[:, a] * lam[:, b]
            grads[:, 3 + k, :] = 4.0 * (
                lam[:, b, None] * _BARY_GRAD[a] + lam[:, a, None] * _BARY_GRAD[b]
            )

    if single:
        return values[0], grads[0]
    return values, grads


def affine_maps(mesh: Mesh) -> AffineMap:
    """
    Affine maps of all triangles of a mesh.

    Raises:
        DegenerateElementError: If any triangle has det J <= 0
    """
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    p1 = mesh.vertices[mesh.triangles[:, 1]]
    p2 = mesh.vertices[mesh.triangles[:, 2]]
    jac = np.stack([p1 - p0, p2 - p0], axis=2)
    return affine_map_from_jacobian(jac, p0)


def affine_map_from_jacobian(
    jacobian: NDArray[np.float64], origin: NDArray[np.float64]
) -> AffineMap:
    det = jacobian[:, 0, 0] * jacobian[:, 1, 1] - jacobian[:, 0, 1] * jacobian[:, 1, 0]
    bad = np.flatnonzero(~(det > 0.0))
    if bad.size:
        raise DegenerateElementError(
            f"{bad.size} degenerate or inverted triangle(s), first index {int(bad[0])}"
        )
    inv_t = np.empty_like(jacobian)
    inv_t[:, 0, 0] = jacobian[:, 1, 1] / det
    inv_t[:, 0, 1] = -jacobian[:, 1, 0] / det
    inv_t[:, 1, 0] = -jacobian[:, 0, 1] / det
    inv_t[:, 1, 1] = jacobian[:, 0, 0] / det
    return AffineMap(jacobian=jacobian, inverse_transpose=inv_t, det=det, origin=origin)


def physical_gradients(
    amap: AffineMap, ref_gradients: NDArray[np.float64]
) -> NDArray[np.float64]:
    """
    Push reference gradients forward: grad_x N = J^{-T} grad_xi N.

    Args:
        amap: Affine maps of F triangles
        ref_gradients: (Q, n, 2) reference gradients

    Returns:
        (F, Q, n, 2) physical gradients
    """
    return np.einsum("fij,qnj->fqni", amap.inverse_transpose, ref_gradients)
