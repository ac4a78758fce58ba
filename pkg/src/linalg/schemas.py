"""Block system types"""

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from shared.exceptions import BlockLayoutError, DimensionMismatchError


@dataclass(frozen=True)
class BlockLayout:
    """Ordered named fields of a monolithic system."""

    fields: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.fields]
        if len(set(names)) != len(names):
            raise BlockLayoutError(f"duplicate field names in layout {names}")
        for name, size in self.fields:
            if size < 1:
                raise BlockLayoutError(f"field {name!r} has non-positive size {size}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fields)

    @property
    def size(self) -> int:
        return sum(size for _, size in self.fields)

    def offset(self, name: str) -> int:
        start = 0
        for field_name, size in self.fields:
            if field_name == name:
                return start
            start += size
        raise BlockLayoutError(f"unknown field {name!r}")

    def span(self, name: str) -> slice:
        start = self.offset(name)
        return slice(start, start + dict(self.fields)[name])


@dataclass
class BlockSystem:
    """
    Monolithic sparse system with essential conditions eliminated.

    Rows of constrained dofs carry a unit diagonal; when a mean-zero
    constraint is present one multiplier row/column is appended last.
    """

    matrix: sp.csr_matrix
    rhs: NDArray[np.float64]
    layout: BlockLayout
    keep: NDArray[np.float64]
    mean_field: Optional[str] = None
    extra: int = field(default=0)

    @property
    def size(self) -> int:
        return self.layout.size + self.extra

    def assemble_rhs(self, parts: Mapping[str, NDArray[np.float64]]) -> NDArray[np.float64]:
        """Stack per-field right-hand sides and apply the essential conditions."""
        b = np.zeros(self.layout.size)
        for name, vector in parts.items():
            span = self.layout.span(name)
            vector = np.asarray(vector, dtype=float)
            if vector.shape != (span.stop - span.start,):
                raise DimensionMismatchError(
                    f"rhs for {name!r} has shape {vector.shape}, expected {span.stop - span.start}"
                )
            b[span] += vector
        b = self.keep * b
        if self.extra:
            b = np.concatenate([b, np.zeros(self.extra)])
        return b

    def split(self, x: NDArray[np.float64]) -> dict[str, NDArray[np.float64]]:
        """Per-field views of a solution vector; the multiplier is dropped."""
        return {name: x[self.layout.span(name)].copy() for name in self.layout.names}
