"""Error reports and observed-rate tables"""

from typing import Iterator

from pydantic import BaseModel, Field

# (field, norm) pairs reported by convergence studies
TRACKED_NORMS: tuple[tuple[str, str], ...] = (
    ("phi", "H1"),
    ("mu", "H1"),
    ("u", "H1"),
    ("B", "H1"),
    ("p", "L2"),
)


class ErrorReport(BaseModel):
    """Errors of one mesh level against the exact solution at time t."""

    n: int = Field(..., ge=1, description="Subdivisions per side")
    h: float = Field(..., gt=0.0, description="Mesh size 1/n")
    dt: float = Field(default=0.0, ge=0.0, description="Time step used on this level")
    t: float = Field(default=0.0, description="Time the errors refer to")
    errors: dict[str, dict[str, float]] = Field(
        default_factory=dict, description="field -> norm name -> error"
    )

    def rows(self) -> Iterator[tuple[str, str, float]]:
        for field_name, norms in self.errors.items():
            for norm, value in norms.items():
                yield field_name, norm, value


class RateRow(BaseModel):
    """Observed rate of one quantity between two consecutive levels."""

    field: str
    norm: str
    n_coarse: int
    n_fine: int
    error_coarse: float
    error_fine: float
    rate: float


class RateTable(BaseModel):
    """Observed convergence rates between consecutive levels."""

    levels: list[int]
    rows: list[RateRow] = Field(default_factory=list)

    def rates(self, field: str, norm: str) -> list[float]:
        return [row.rate for row in self.rows if row.field == field and row.norm == norm]

    def tracked(self) -> list[RateRow]:
        wanted = set(TRACKED_NORMS)
        return [row for row in self.rows if (row.field, row.norm) in wanted]
