"""Sparse assembly patterns, direct factorization and block composition."""

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import structlog
from numpy.typing import NDArray

from linalg.schemas import BlockLayout, BlockSystem
from shared.config import get_settings
from shared.exceptions import (
    BlockLayoutError,
    DimensionMismatchError,
    ResidualToleranceError,
    SingularSystemError,
)

logger = structlog.get_logger(__name__)


class SparsityPattern:
    """
    CSR structure of an element-assembled matrix.

    The pattern and the scatter map from element entries to CSR slots are
    computed once; ``assemble`` only sums values, in a fixed order, so the
    result does not depend on how local matrices were produced.
    """

    def __init__(
        self,
        test_dofs: NDArray[np.int64],
        trial_dofs: NDArray[np.int64],
        shape: tuple[int, int],
    ):
        self.shape = shape
        self.test_dofs = test_dofs
        n_test, n_trial = test_dofs.shape[1], trial_dofs.shape[1]
        self.local_shape = (n_test, n_trial)
        rows = np.repeat(test_dofs, n_trial, axis=1).ravel().astype(np.int64)
        cols = np.tile(trial_dofs, (1, n_test)).ravel().astype(np.int64)
        keys = rows * shape[1] + cols
        unique, inverse = np.unique(keys, return_inverse=True)
        self.scatter = inverse.ravel()
        self.indices = (unique % shape[1]).astype(np.int64)
        counts = np.bincount(unique // shape[1], minlength=shape[0])
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.nnz = int(unique.size)

    def assemble(self, local: NDArray[np.float64]) -> sp.csr_matrix:
        """Sum local matrices (F, n_test, n_trial) into a CSR matrix."""
        if local.shape[1:] != self.local_shape:
            raise DimensionMismatchError(
                f"local matrices {local.shape[1:]} do not match pattern {self.local_shape}"
            )
        data = np.bincount(self.scatter, weights=local.ravel(), minlength=self.nnz)
        return sp.csr_matrix(
            (data, self.indices.copy(), self.indptr.copy()), shape=self.shape
        )

    def assemble_vector(self, local: NDArray[np.float64]) -> NDArray[np.float64]:
        """Sum local vectors (F, n_test) into a global vector."""
        return np.bincount(
            self.test_dofs.ravel(), weights=local.ravel(), minlength=self.shape[0]
        )


@dataclass(frozen=True)
class Factorization:
    """Sparse LU factors of a square matrix; immutable once built."""

    lu: spla.SuperLU
    matrix: sp.csc_matrix

    def solve(self, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.matrix.shape[0]:
            raise DimensionMismatchError(
                f"rhs of length {rhs.shape[0]} for system of size {self.matrix.shape[0]}"
            )
        return self.lu.solve(rhs)


def lu_factor(matrix: sp.spmatrix, pivot_threshold: Optional[float] = None) -> Factorization:
    """
    Factor a square sparse matrix with partial pivoting.

    Raises:
        DimensionMismatchError: If the matrix is not square
        SingularSystemError: If a pivot falls below threshold * ||A||_inf
    """
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"cannot factor non-square matrix {matrix.shape}")
    threshold = get_settings().PIVOT_THRESHOLD if pivot_threshold is None else pivot_threshold
    csc = sp.csc_matrix(matrix)
    csc.sort_indices()
    try:
        lu = spla.splu(csc, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(f"matrix is exactly singular: {exc}") from exc

    scale = spla.norm(csc, np.inf)
    pivots = np.abs(lu.U.diagonal())
    small = np.flatnonzero(~(pivots > threshold * scale))
    if small.size:
        row = int(np.argsort(lu.perm_r)[small[0]])
        raise SingularSystemError(
            f"pivot {pivots[small[0]]:.3e} below {threshold:g}*||A|| at row {row}", row=row
        )
    return Factorization(lu=lu, matrix=csc)


def relative_residual(
    matrix: sp.spmatrix, x: NDArray[np.float64], rhs: NDArray[np.float64]
) -> float:
    """||Ax - b|| / (||A|| ||x|| + ||b||) in the infinity norm."""
    r = matrix @ x - rhs
    denom = spla.norm(matrix, np.inf) * np.linalg.norm(x, np.inf) + np.linalg.norm(rhs, np.inf)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(r, np.inf) / denom)


def solve_checked(
    factorization: Factorization,
    rhs: NDArray[np.float64],
    tolerance: Optional[float] = None,
) -> tuple[NDArray[np.float64], float]:
    """
    Solve with an existing factorization and verify the residual.

    Raises:
        ResidualToleranceError: If the relative residual exceeds the tolerance
    """
    tol = get_settings().RESIDUAL_TOLERANCE if tolerance is None else tolerance
    x = factorization.solve(rhs)
    residual = relative_residual(factorization.matrix, x, rhs)
    if not residual <= tol:
        raise ResidualToleranceError(
            f"relative residual {residual:.3e} exceeds {tol:.1e}", residual=residual
        )
    return x, residual


def compose_block(
    layout: BlockLayout,
    blocks: Mapping[tuple[str, str], sp.spmatrix],
    bcs: Optional[Mapping[str, NDArray[np.int64]]] = None,
    mean_constraint: Optional[tuple[str, NDArray[np.float64]]] = None,
    rhs: Optional[Mapping[str, NDArray[np.float64]]] = None,
) -> BlockSystem:
    """
    Build a monolithic system from named blocks.

    Essential conditions (homogeneous) are eliminated symmetrically: the
    constrained rows and columns are zeroed and a unit diagonal inserted.
    A mean-zero constraint appends one Lagrange-multiplier row and column.

    Args:
        layout: Field order and sizes
        blocks: (row field, column field) -> sparse block; missing blocks are zero
        bcs: Field -> field-local indices of constrained dofs
        mean_constraint: (field, weights) with weights^T x_field = 0 enforced
        rhs: Optional field -> right-hand side

    Raises:
        BlockLayoutError: Unknown fields, out-of-range or overlapping constraints
        DimensionMismatchError: Block shapes inconsistent with the layout
    """
    sizes = dict(layout.fields)
    grid: list[list[Optional[sp.spmatrix]]] = [[None] * len(sizes) for _ in sizes]
    names = layout.names
    for (row, col), block in blocks.items():
        if row not in sizes or col not in sizes:
            raise BlockLayoutError(f"block ({row!r}, {col!r}) refers to an unknown field")
        if block.shape != (sizes[row], sizes[col]):
            raise DimensionMismatchError(
                f"block ({row!r}, {col!r}) has shape {block.shape}, "
                f"expected {(sizes[row], sizes[col])}"
            )
        grid[names.index(row)][names.index(col)] = block
    for i, name in enumerate(names):
        if grid[i][i] is None:
            grid[i][i] = sp.csr_matrix((sizes[name], sizes[name]))
    matrix = sp.bmat(grid, format="csr")

    keep = np.ones(layout.size)
    bcs = bcs or {}
    for name, dofs in bcs.items():
        if name not in sizes:
            raise BlockLayoutError(f"boundary condition on unknown field {name!r}")
        dofs = np.asarray(dofs, dtype=np.int64)
        if dofs.size and (dofs.min() < 0 or dofs.max() >= sizes[name]):
            raise BlockLayoutError(f"boundary dofs out of range for field {name!r}")
        keep[layout.offset(name) + dofs] = 0.0
    if mean_constraint is not None and mean_constraint[0] in bcs and len(bcs[mean_constraint[0]]):
        raise BlockLayoutError(
            f"field {mean_constraint[0]!r} carries both essential and mean-zero constraints"
        )

    k = sp.diags(keep)
    matrix = (k @ matrix @ k + sp.diags(1.0 - keep)).tocsr()

    extra = 0
    mean_field = None
    if mean_constraint is not None:
        mean_field, weights = mean_constraint
        span = layout.span(mean_field)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (span.stop - span.start,):
            raise DimensionMismatchError(f"mean weights do not match field {mean_field!r}")
        border = np.zeros(layout.size)
        border[span] = weights
        column = sp.csr_matrix(border[:, None])
        matrix = sp.bmat([[matrix, column], [column.T, None]], format="csr")
        extra = 1

    matrix.sum_duplicates()
    matrix.sort_indices()
    system = BlockSystem(
        matrix=matrix,
        rhs=np.zeros(layout.size + extra),
        layout=layout,
        keep=keep,
        mean_field=mean_field,
        extra=extra,
    )
    if rhs is not None:
        system.rhs = system.assemble_rhs(rhs)
    return system


def solve_block(
    system: BlockSystem,
    factorization: Optional[Factorization] = None,
    tolerance: Optional[float] = None,
) -> tuple[dict[str, NDArray[np.float64]], float, Factorization]:
    """Factor (unless given) and solve a block system; returns fields, residual, factors."""
    factors = factorization if factorization is not None else lu_factor(system.matrix)
    x, residual = solve_checked(factors, system.rhs, tolerance)
    logger.debug("block solve", size=system.size, residual=residual)
    return system.split(x), residual, factors
