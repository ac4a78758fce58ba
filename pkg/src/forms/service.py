"""
Assembly of the bilinear and trilinear forms of the coupled system.

All element loops are vectorized over triangles and quadrature points with
``numpy.einsum``; global matrices are produced through cached
``SparsityPattern`` objects so repeated assembly only rewrites values.

2D conventions: curl of a vector field is the scalar d1 B2 - d2 B1, the
cross product of two in-plane vectors is the scalar u1 B2 - u2 B1, and
H x (scalar c) is (H2 c, -H1 c).
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import structlog
from numpy.typing import NDArray

from fem_basis.quadrature import gauss_rule
from fem_basis.service import affine_maps, eval_basis, physical_gradients, reference_element
from forms.schemas import CoefficientLaw, DiscreteField
from linalg.service import SparsityPattern
from shared.config import get_settings
from shared.exceptions import CoefficientPositivityError, DimensionMismatchError
from space.schemas import FieldKind, MixedSpace

logger = structlog.get_logger(__name__)

FieldLike = Union[DiscreteField, NDArray[np.float64]]
SourceFunction = Callable[..., object]


@dataclass(frozen=True)
class Tabulation:
    """
    Basis functions of one field kind at the quadrature points of all triangles.

    Scalar kinds: values (Q, n), grads (F, Q, n, 2).
    Vector kind: values (Q, n, 2), grads (F, Q, n, 2, 2) with [..., c, d] = d_d phi_c.
    """

    kind: FieldKind
    values: NDArray[np.float64]
    grads: NDArray[np.float64]
    dx: NDArray[np.float64]
    points: NDArray[np.float64]


@dataclass(frozen=True)
class FieldValues:
    """A field evaluated at quadrature points: values, gradients and measure."""

    values: NDArray[np.float64]
    grads: NDArray[np.float64]
    dx: NDArray[np.float64]
    points: NDArray[np.float64]


def _vector_tabulation(scalar: Tabulation) -> Tabulation:
    nq, n = scalar.values.shape
    values = np.zeros((nq, 2 * n, 2))
    values[:, :n, 0] = scalar.values
    values[:, n:, 1] = scalar.values
    f = scalar.grads.shape[0]
    grads = np.zeros((f, nq, 2 * n, 2, 2))
    grads[:, :, :n, 0, :] = scalar.grads
    grads[:, :, n:, 1, :] = scalar.grads
    return Tabulation(
        kind=FieldKind.VECTOR_P2, values=values, grads=grads, dx=scalar.dx, points=scalar.points
    )


def curl(grads: NDArray[np.float64]) -> NDArray[np.float64]:
    """Scalar curl d1 v2 - d2 v1 from gradients [..., c, d]."""
    return grads[..., 1, 0] - grads[..., 0, 1]


def divergence(grads: NDArray[np.float64]) -> NDArray[np.float64]:
    return grads[..., 0, 0] + grads[..., 1, 1]


def cross(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    """Scalar cross product a1 b2 - a2 b1 over the last axis."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class FormAssembler:
    """Assembles every form of the scheme on one mixed space."""

    def __init__(self, space: MixedSpace, degree: Optional[int] = None):
        settings = get_settings()
        self.space = space
        self.mesh = space.mesh
        self.degree = degree if degree is not None else settings.ASSEMBLY_QUADRATURE_DEGREE
        self.exact_degree = max(self.degree, 8)
        self.amap = affine_maps(self.mesh)
        self._maps = {
            FieldKind.SCALAR_P1: space.m_map,
            FieldKind.SCALAR_P2: space.q_map,
            FieldKind.VECTOR_P2: space.x_map,
        }
        self._tabulations: dict[tuple[FieldKind, int], Tabulation] = {}
        self._patterns: dict[tuple[FieldKind, FieldKind], SparsityPattern] = {}
        self._cache: dict[str, sp.csr_matrix] = {}

    # -- tabulation and evaluation -------------------------------------------------

    def tabulate(self, kind: FieldKind, degree: Optional[int] = None) -> Tabulation:
        degree = self.degree if degree is None else degree
        key = (kind, degree)
        if key not in self._tabulations:
            if kind is FieldKind.VECTOR_P2:
                tab = _vector_tabulation(self.tabulate(FieldKind.SCALAR_P2, degree))
            else:
                rule = gauss_rule(degree)
                values, ref_grads = eval_basis(reference_element(kind.degree), rule.points)
                tab = Tabulation(
                    kind=kind,
                    values=values,
                    grads=physical_gradients(self.amap, ref_grads),
                    dx=self.amap.det[:, None] * rule.weights[None, :],
                    points=self.amap.to_physical(rule.points),
                )
            self._tabulations[key] = tab
        return self._tabulations[key]

    def _coefficients(self, field: FieldLike, kind: FieldKind) -> NDArray[np.float64]:
        dofmap = self._maps[kind]
        if isinstance(field, DiscreteField):
            if field.dofmap.kind is not kind:
                raise DimensionMismatchError(
                    f"expected a {kind.value} field, got {field.dofmap.kind.value}"
                )
            values = field.values
        else:
            values = np.asarray(field, dtype=float)
        if values.shape != (dofmap.n_dofs,):
            raise DimensionMismatchError(
                f"{kind.value} field needs {dofmap.n_dofs} values, got shape {values.shape}"
            )
        return values

    def evaluate(
        self, field: FieldLike, kind: FieldKind, degree: Optional[int] = None
    ) -> FieldValues:
        """Values and gradients of a field at the quadrature points."""
        coeffs = self._coefficients(field, kind)
        tab = self.tabulate(kind, degree)
        local = coeffs[self._maps[kind].cell_dofs]
        if kind is FieldKind.VECTOR_P2:
            values = np.einsum("qnc,fn->fqc", tab.values, local)
            grads = np.einsum("fqncd,fn->fqcd", tab.grads, local)
        else:
            values = np.einsum("qn,fn->fq", tab.values, local)
            grads = np.einsum("fqnd,fn->fqd", tab.grads, local)
        return FieldValues(values=values, grads=grads, dx=tab.dx, points=tab.points)

    def pattern(self, test: FieldKind, trial: FieldKind) -> SparsityPattern:
        key = (test, trial)
        if key not in self._patterns:
            rows, cols = self._maps[test], self._maps[trial]
            self._patterns[key] = SparsityPattern(
                rows.cell_dofs, cols.cell_dofs, (rows.n_dofs, cols.n_dofs)
            )
        return self._patterns[key]

    def _coefficient(
        self, law: CoefficientLaw, phi: FieldLike, name: str, degree: Optional[int] = None
    ) -> NDArray[np.float64]:
        values = law(self.evaluate(phi, FieldKind.SCALAR_P2, degree).values)
        bad = ~(np.isfinite(values) & (values > 0.0))
        if np.any(bad):
            f, q = np.argwhere(bad)[0]
            raise CoefficientPositivityError(
                f"coefficient {name} = {values[f, q]!r} at triangle {int(f)}, "
                f"quadrature point {int(q)}"
            )
        return values

    # -- bilinear forms ------------------------------------------------------------

    def assemble_mass(self, kind: FieldKind) -> sp.csr_matrix:
        """L2 mass matrix of a field kind (cached)."""
        key = f"mass:{kind.value}"
        if key not in self._cache:
            tab = self.tabulate(kind)
            if kind is FieldKind.VECTOR_P2:
                local = np.einsum("fq,qic,qjc->fij", tab.dx, tab.values, tab.values)
            else:
                local = np.einsum("fq,qi,qj->fij", tab.dx, tab.values, tab.values)
            self._cache[key] = self.pattern(kind, kind).assemble(local)
        return self._cache[key]

    def assemble_weighted_mass(
        self, weight: NDArray[np.float64], degree: Optional[int] = None
    ) -> sp.csr_matrix:
        """Scalar P2 mass matrix with a weight given at quadrature points."""
        tab = self.tabulate(FieldKind.SCALAR_P2, degree)
        local = np.einsum("fq,qi,qj->fij", tab.dx * weight, tab.values, tab.values)
        return self.pattern(FieldKind.SCALAR_P2, FieldKind.SCALAR_P2).assemble(local)

    def assemble_a_phi(self, kappa: CoefficientLaw, phi_at: FieldLike) -> sp.csr_matrix:
        """a_phi(phi; mu, psi) = int kappa(phi) grad mu . grad psi."""
        weight = self._coefficient(kappa, phi_at, "kappa")
        tab = self.tabulate(FieldKind.SCALAR_P2)
        local = np.einsum("fq,fqid,fqjd->fij", tab.dx * weight, tab.grads, tab.grads)
        return self.pattern(FieldKind.SCALAR_P2, FieldKind.SCALAR_P2).assemble(local)

    def assemble_stiffness(self) -> sp.csr_matrix:
        """Unit-coefficient P2 stiffness matrix (cached)."""
        if "stiffness" not in self._cache:
            tab = self.tabulate(FieldKind.SCALAR_P2)
            local = np.einsum("fq,fqid,fqjd->fij", tab.dx, tab.grads, tab.grads)
            self._cache["stiffness"] = self.pattern(
                FieldKind.SCALAR_P2, FieldKind.SCALAR_P2
            ).assemble(local)
        return self._cache["stiffness"]

    def assemble_a_f(self, nu: CoefficientLaw, phi_at: FieldLike) -> sp.csr_matrix:
        """a_f(phi; u, v) = int 2 nu(phi) D(u) : D(v)."""
        weight = self._coefficient(nu, phi_at, "nu")
        tab = self.tabulate(FieldKind.VECTOR_P2)
        strain = 0.5 * (tab.grads + np.swapaxes(tab.grads, -1, -2))
        local = np.einsum("fq,fqicd,fqjcd->fij", 2.0 * tab.dx * weight, strain, strain)
        return self.pattern(FieldKind.VECTOR_P2, FieldKind.VECTOR_P2).assemble(local)

    def assemble_a_B(self, eta: CoefficientLaw, phi_at: FieldLike) -> sp.csr_matrix:
        """a_B(phi; B, H) = int eta(phi) (curl B curl H + div B div H)."""
        weight = self._coefficient(eta, phi_at, "eta")
        tab = self.tabulate(FieldKind.VECTOR_P2)
        rot = curl(tab.grads)
        div = divergence(tab.grads)
        wdx = tab.dx * weight
        local = np.einsum("fq,fqi,fqj->fij", wdx, rot, rot) + np.einsum(
            "fq,fqi,fqj->fij", wdx, div, div
        )
        return self.pattern(FieldKind.VECTOR_P2, FieldKind.VECTOR_P2).assemble(local)

    def assemble_d(self) -> sp.csr_matrix:
        """d(v, q) = int q div v, rows indexed by q (P1), columns by v (cached)."""
        if "d" not in self._cache:
            vec = self.tabulate(FieldKind.VECTOR_P2)
            pres = self.tabulate(FieldKind.SCALAR_P1)
            local = np.einsum("fq,qi,fqj->fij", vec.dx, pres.values, divergence(vec.grads))
            self._cache["d"] = self.pattern(FieldKind.SCALAR_P1, FieldKind.VECTOR_P2).assemble(
                local
            )
        return self._cache["d"]

    # -- trilinear forms -----------------------------------------------------------

    def assemble_b(self, advecting: FieldLike) -> sp.csr_matrix:
        """
        Skew-symmetrized convection b(w; u, v) with rows v and columns u.

        b(w, u, v) = 1/2 int [(w . grad) u] . v - [(w . grad) v] . u
        """
        w = self.evaluate(advecting, FieldKind.VECTOR_P2).values
        tab = self.tabulate(FieldKind.VECTOR_P2)
        conv = np.einsum("fqjcd,fqd->fqjc", tab.grads, w)
        half = np.einsum("fq,fqjc,qic->fij", tab.dx, conv, tab.values)
        local = 0.5 * (half - np.swapaxes(half, 1, 2))
        return self.pattern(FieldKind.VECTOR_P2, FieldKind.VECTOR_P2).assemble(local)

    def _cross_with(self, lagged: FieldLike) -> tuple[Tabulation, NDArray[np.float64]]:
        b_lag = self.evaluate(lagged, FieldKind.VECTOR_P2).values
        tab = self.tabulate(FieldKind.VECTOR_P2)
        # N_i x B_lag for every vector basis function
        crossed = cross(tab.values[None, :, :, :], b_lag[:, :, None, :])
        return tab, crossed

    def assemble_c_hat(self, b_lag: FieldLike) -> sp.csr_matrix:
        """c_hat(H, B, v) = int (H x curl B) . v with H = b_lag; rows v, columns B."""
        tab, crossed = self._cross_with(b_lag)
        local = np.einsum("fq,fqi,fqj->fij", tab.dx, crossed, curl(tab.grads))
        return self.pattern(FieldKind.VECTOR_P2, FieldKind.VECTOR_P2).assemble(local)

    def assemble_c_tilde(self, b_lag: FieldLike) -> sp.csr_matrix:
        """c_tilde(u, B, H) = int (u x B) curl H with B = b_lag; rows H, columns u."""
        tab, crossed = self._cross_with(b_lag)
        local = np.einsum("fq,fqi,fqj->fij", tab.dx, curl(tab.grads), crossed)
        return self.pattern(FieldKind.VECTOR_P2, FieldKind.VECTOR_P2).assemble(local)

    def assemble_capillary(
        self, phi_lag: FieldLike, lam: float = 1.0
    ) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """
        Capillary coupling matrices with kernel grad phi_lag.

        Returns:
            K1 (rows v, columns mu): lam * int mu grad(phi_lag) . v
            K2 (rows psi, columns u): int (grad(phi_lag) . u) psi, so K1 = lam K2^T
        """
        grad_phi = self.evaluate(phi_lag, FieldKind.SCALAR_P2).grads
        vec = self.tabulate(FieldKind.VECTOR_P2)
        scal = self.tabulate(FieldKind.SCALAR_P2)
        directional = np.einsum("qjc,fqc->fqj", vec.values, grad_phi)
        local = np.einsum("fq,qi,fqj->fij", scal.dx, scal.values, directional)
        k2 = self.pattern(FieldKind.SCALAR_P2, FieldKind.VECTOR_P2).assemble(local)
        k1 = (lam * k2.T).tocsr()
        k1.sort_indices()
        return k1, k2

    def assemble_cubic(self, phi_iterate: FieldLike) -> sp.csr_matrix:
        """
        Mass matrix weighted with the square of the current iterate.

        Integrated with the degree-8 rule, exact for the P2 integrand.
        """
        phi = self.evaluate(phi_iterate, FieldKind.SCALAR_P2, self.exact_degree).values
        return self.assemble_weighted_mass(phi**2, self.exact_degree)

    # -- load vectors --------------------------------------------------------------

    def assemble_load(
        self, f: Optional[SourceFunction], kind: FieldKind, t: float = 0.0
    ) -> NDArray[np.float64]:
        """
        l_i = int f(x, y, t) . N_i.

        ``f`` is called with physical quadrature coordinates; vector kinds
        expect a pair of component arrays. ``None`` gives the zero vector.
        """
        dofmap = self._maps[kind]
        if f is None:
            return np.zeros(dofmap.n_dofs)
        tab = self.tabulate(kind)
        x, y = tab.points[..., 0], tab.points[..., 1]
        if kind is FieldKind.VECTOR_P2:
            fx, fy = f(x, y, t)  # type: ignore[misc]
            fvals = np.stack(
                [np.broadcast_to(fx, x.shape), np.broadcast_to(fy, x.shape)], axis=-1
            )
            local = np.einsum("fq,qic,fqc->fi", tab.dx, tab.values, fvals)
        else:
            fvals = np.broadcast_to(np.asarray(f(x, y, t), dtype=float), x.shape)
            local = np.einsum("fq,qi,fq->fi", tab.dx, tab.values, fvals)
        return self.pattern(kind, kind).assemble_vector(local)
