"""Discrete energy, error norms, weak divergence and observed rates."""

import math
from typing import Optional

import numpy as np
import structlog
from numpy.typing import NDArray

from forms.service import FormAssembler
from scheme.schemas import FieldState, SchemeParams
from shared.config import get_settings
from shared.exceptions import RateSequenceError
from space.schemas import FieldKind
from verify.mms import ManufacturedSolution
from verify.schemas import ErrorReport, RateRow, RateTable

logger = structlog.get_logger(__name__)


def _norm_degree(degree: Optional[int]) -> int:
    return get_settings().ERROR_QUADRATURE_DEGREE if degree is None else degree


def energy(
    state: FieldState,
    params: SchemeParams,
    assembler: FormAssembler,
    degree: Optional[int] = None,
) -> float:
    """
    Total energy of a state.

    E = int 1/2 |u|^2 + S_c/2 |B|^2 + lam eps/2 |grad phi|^2 + lam/(4 eps) (1 - phi^2)^2
    """
    degree = _norm_degree(degree)
    phi = assembler.evaluate(state.phi, FieldKind.SCALAR_P2, degree)
    u = assembler.evaluate(state.u, FieldKind.VECTOR_P2, degree)
    b = assembler.evaluate(state.B, FieldKind.VECTOR_P2, degree)
    density = (
        0.5 * np.sum(u.values**2, axis=-1)
        + 0.5 * params.s_c * np.sum(b.values**2, axis=-1)
        + 0.5 * params.lam * params.eps * np.sum(phi.grads**2, axis=-1)
        + params.lam / (4.0 * params.eps) * (1.0 - phi.values**2) ** 2
    )
    return float(np.sum(phi.dx * density))


def weak_divergence(u: NDArray[np.float64], assembler: FormAssembler) -> float:
    """max over P1 basis functions q of |d(u, q)| / ||q||_L2."""
    div = assembler.assemble_d() @ u
    norms = np.sqrt(assembler.assemble_mass(FieldKind.SCALAR_P1).diagonal())
    return float(np.max(np.abs(div) / norms))


def _scalar_errors(
    diff: NDArray[np.float64],
    grad_diff: Optional[NDArray[np.float64]],
    dx: NDArray[np.float64],
) -> dict[str, float]:
    l2 = float(np.sum(dx * diff**2))
    if grad_diff is None:
        return {"L2": math.sqrt(l2)}
    semi = float(np.sum(dx * np.sum(grad_diff.reshape(dx.shape + (-1,)) ** 2, axis=-1)))
    return {"L2": math.sqrt(l2), "H1_semi": math.sqrt(semi), "H1": math.sqrt(l2 + semi)}


def error_norms(
    state: FieldState,
    exact: ManufacturedSolution,
    t: float,
    assembler: FormAssembler,
    dt: float = 0.0,
    degree: Optional[int] = None,
) -> ErrorReport:
    """
    L2 and H1 errors of phi, mu, u, B and the L2 error of p at time t.

    Exact fields are evaluated at the physical quadrature points of the
    error rule; the pointwise difference is integrated per element.
    """
    degree = _norm_degree(degree)
    errors: dict[str, dict[str, float]] = {}

    for name, values, exact_value, exact_grad in (
        ("phi", state.phi, exact.phi, exact.grad_phi),
        ("mu", state.mu, exact.mu, exact.grad_mu),
    ):
        fv = assembler.evaluate(values, FieldKind.SCALAR_P2, degree)
        x, y = fv.points[..., 0], fv.points[..., 1]
        gx, gy = exact_grad(x, y, t)
        grad_diff = fv.grads - np.stack([gx, gy], axis=-1)
        errors[name] = _scalar_errors(fv.values - exact_value(x, y, t), grad_diff, fv.dx)

    for name, values, exact_value, exact_grad in (
        ("u", state.u, exact.u, exact.grad_u),
        ("B", state.B, exact.B, exact.grad_B),
    ):
        fv = assembler.evaluate(values, FieldKind.VECTOR_P2, degree)
        x, y = fv.points[..., 0], fv.points[..., 1]
        ex, ey = exact_value(x, y, t)
        diff = fv.values - np.stack([ex, ey], axis=-1)
        grad_exact = np.stack(
            [np.stack(exact_grad[c](x, y, t), axis=-1) for c in range(2)], axis=-2
        )
        l2 = np.sum(diff**2, axis=-1)
        errors[name] = _scalar_errors(np.sqrt(l2), fv.grads - grad_exact, fv.dx)

    fv = assembler.evaluate(state.p, FieldKind.SCALAR_P1, degree)
    x, y = fv.points[..., 0], fv.points[..., 1]
    errors["p"] = _scalar_errors(fv.values - exact.p(x, y, t), None, fv.dx)

    mesh = assembler.mesh
    return ErrorReport(n=mesh.n, h=mesh.h, dt=dt, t=t, errors=errors)


def observed_rates(reports: list[ErrorReport]) -> RateTable:
    """
    log2 error ratios between consecutive levels.

    Raises:
        RateSequenceError: Fewer than two levels, or mesh sizes not halving
    """
    if len(reports) < 2:
        raise RateSequenceError(f"need at least two levels, got {len(reports)}")
    for coarse, fine in zip(reports, reports[1:]):
        if not math.isclose(fine.h, coarse.h / 2.0, rel_tol=1e-12):
            raise RateSequenceError(
                f"mesh sizes must halve between levels: h = {coarse.h!r} then {fine.h!r}"
            )

    rows: list[RateRow] = []
    for coarse, fine in zip(reports, reports[1:]):
        for field, norm, e_coarse in coarse.rows():
            e_fine = fine.errors.get(field, {}).get(norm)
            if e_fine is None:
                continue
            if e_coarse > 0.0 and e_fine > 0.0:
                rate = math.log2(e_coarse / e_fine)
            else:
                rate = float("nan")
            rows.append(
                RateRow(
                    field=field,
                    norm=norm,
                    n_coarse=coarse.n,
                    n_fine=fine.n,
                    error_coarse=e_coarse,
                    error_fine=e_fine,
                    rate=rate,
                )
            )
    return RateTable(levels=[report.n for report in reports], rows=rows)
