"""
Quadrature tables for the reference triangle.

Symmetric rules are stored as orbits in barycentric coordinates with weights
normalized to the triangle area; they are rescaled to the reference area 1/2
on construction. Degrees 9 and 10 use a collapsed Gauss-Legendre product
rule, which is deterministic and has positive weights.
"""

from functools import lru_cache
from itertools import permutations

import numpy as np

from fem_basis.schemas import QuadratureRule
from shared.config import MAX_QUADRATURE_DEGREE
from shared.exceptions import QuadratureError

_SQRT15 = float(np.sqrt(15.0))

# (barycentric orbit generator, area-normalized weight)
_SYMMETRIC_TABLES: dict[int, list[tuple[tuple[float, float, float], float]]] = {
    1: [((1 / 3, 1 / 3, 1 / 3), 1.0)],
    2: [((2 / 3, 1 / 6, 1 / 6), 1 / 3)],
    # centroid, edge midpoints and vertices
    3: [
        ((1 / 3, 1 / 3, 1 / 3), 9 / 20),
        ((0.5, 0.5, 0.0), 2 / 15),
        ((1.0, 0.0, 0.0), 1 / 20),
    ],
    4: [
        ((0.10810301816807022736, 0.44594849091596488632, 0.44594849091596488632),
         0.22338158967801146570),
        ((0.81684757298045851308, 0.091576213509770743460, 0.091576213509770743460),
         0.10995174365532186764),
    ],
    5: [
        ((1 / 3, 1 / 3, 1 / 3), 0.225),
        ((1 - 2 * (6 - _SQRT15) / 21, (6 - _SQRT15) / 21, (6 - _SQRT15) / 21),
         (155 - _SQRT15) / 1200),
        ((1 - 2 * (6 + _SQRT15) / 21, (6 + _SQRT15) / 21, (6 + _SQRT15) / 21),
         (155 + _SQRT15) / 1200),
    ],
    6: [
        ((0.50142650965817915742, 0.24928674517091042129, 0.24928674517091042129),
         0.11678627572637936603),
        ((0.87382197101699554332, 0.063089014491502228340, 0.063089014491502228340),
         0.050844906370206816921),
        ((0.053145049844816947353, 0.31035245103378440542, 0.63650249912139864723),
         0.082851075618373575194),
    ],
    8: [
        ((1 / 3, 1 / 3, 1 / 3), 0.14431560767778716825),
        ((0.081414823414553687943, 0.45929258829272315602, 0.45929258829272315602),
         0.095091634267284624793),
        ((0.65886138449647958675, 0.17056930775176020662, 0.17056930775176020662),
         0.10321737053471825028),
        ((0.89890554336593804906, 0.050547228317030975458, 0.050547228317030975458),
         0.032458497623198080310),
        ((0.0083947774099576053372, 0.26311282963463811342, 0.72849239295540428124),
         0.027230314174434994264),
    ],
}


def _orbit(generator: tuple[float, float, float]) -> list[tuple[float, float, float]]:
    seen: list[tuple[float, float, float]] = []
    for perm in permutations(generator):
        if not any(np.allclose(perm, s, atol=0.0, rtol=0.0) for s in seen):
            seen.append(perm)
    return seen


def _symmetric_rule(degree: int) -> QuadratureRule:
    points: list[tuple[float, float]] = []
    weights: list[float] = []
    for generator, weight in _SYMMETRIC_TABLES[degree]:
        for l0, l1, l2 in _orbit(generator):
            points.append((l1, l2))
            weights.append(weight)
    w = 0.5 * np.asarray(weights)
    return QuadratureRule(degree=degree, points=np.asarray(points), weights=w)


def _collapsed_rule(degree: int) -> QuadratureRule:
    m = (degree + 3) // 2
    s, ws = np.polynomial.legendre.leggauss(m)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    a, b = np.meshgrid(s, s, indexing="ij")
    wa, wb = np.meshgrid(ws, ws, indexing="ij")
    xi = a.ravel()
    eta = (b * (1.0 - a)).ravel()
    weights = (wa * wb * (1.0 - a)).ravel()
    return QuadratureRule(degree=degree, points=np.column_stack([xi, eta]), weights=weights)


@lru_cache(maxsize=None)
def gauss_rule(min_degree: int) -> QuadratureRule:
    """
    Smallest tabulated rule exact for polynomials of degree >= min_degree.

    Raises:
        QuadratureError: If min_degree lies outside [1, 10]
    """
    if not 1 <= min_degree <= MAX_QUADRATURE_DEGREE:
        raise QuadratureError(
            f"no quadrature rule of degree {min_degree}; table covers 1..{MAX_QUADRATURE_DEGREE}"
        )
    for degree in sorted(_SYMMETRIC_TABLES):
        if degree >= min_degree:
            return _symmetric_rule(degree)
    return _collapsed_rule(min_degree)
