"""CSV tables and legacy VTK snapshots."""

import csv
from pathlib import Path
from typing import Iterable, Sequence

import meshio
import numpy as np
import structlog

from scheme.schemas import FieldState, StepDiagnostics
from space.schemas import MixedSpace
from verify.schemas import ErrorReport, RateTable

logger = structlog.get_logger(__name__)

ERRORS_HEADER = ("n", "h", "dt", "field", "norm", "error")
RATES_HEADER = ("field", "norm", "n_coarse", "n_fine", "error_coarse", "error_fine", "rate")
ENERGY_HEADER = (
    "step",
    "t",
    "E",
    "picard_iters",
    "max_weak_div",
    "mass_drift",
    "dissipation",
)
DIAG_HEADER = (
    "step",
    "t",
    "picard_iters",
    "increment",
    "converged",
    "energy",
    "max_weak_div",
    "max_residual",
    "mass_drift",
    "dissipation",
)


def _cell(value: object) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    """Write a header row and data rows; floats keep 17 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
            count += 1
    logger.info("file written", path=str(path), rows=count)
    return path


def write_errors(path: Path, reports: Sequence[ErrorReport]) -> Path:
    rows = (
        (report.n, report.h, report.dt, field, norm, error)
        for report in reports
        for field, norm, error in report.rows()
    )
    return write_csv(path, ERRORS_HEADER, rows)


def write_rates(path: Path, table: RateTable) -> Path:
    rows = (
        (r.field, r.norm, r.n_coarse, r.n_fine, r.error_coarse, r.error_fine, r.rate)
        for r in table.rows
    )
    return write_csv(path, RATES_HEADER, rows)


def write_energy(path: Path, initial_energy: float, history: Sequence[StepDiagnostics]) -> Path:
    """Energy trace; the first row is the initial state."""
    rows: list[Sequence[object]] = [(0, 0.0, initial_energy, 0, 0.0, 0.0, 0.0)]
    rows.extend(
        (d.step, d.t, d.energy, d.picard_iterations, d.max_weak_div, d.mass_drift, d.dissipation)
        for d in history
    )
    return write_csv(path, ENERGY_HEADER, rows)


def diagnostics_row(d: StepDiagnostics) -> tuple[object, ...]:
    return (
        d.step,
        d.t,
        d.picard_iterations,
        d.increment,
        d.converged,
        d.energy,
        d.max_weak_div,
        d.max_residual,
        d.mass_drift,
        d.dissipation,
    )


def write_diagnostics(path: Path, rows: Sequence[StepDiagnostics]) -> Path:
    return write_csv(path, DIAG_HEADER, (diagnostics_row(d) for d in rows))


def snapshot_mesh(space: MixedSpace, state: FieldState) -> meshio.Mesh:
    """All fields sampled at the mesh vertices on a triangle grid."""
    mesh = space.mesh
    nv = mesh.n_vertices
    points = np.hstack([mesh.vertices, np.zeros((nv, 1))])

    def vertex_vector(values: np.ndarray, scalar_dofs: int) -> np.ndarray:
        return np.column_stack(
            [values[:nv], values[scalar_dofs : scalar_dofs + nv], np.zeros(nv)]
        )

    point_data = {
        "phi": state.phi[:nv].copy(),
        "mu": state.mu[:nv].copy(),
        "p": state.p[:nv].copy(),
        "u": vertex_vector(state.u, space.x_map.scalar_dofs),
        "B": vertex_vector(state.B, space.w_map.scalar_dofs),
    }
    return meshio.Mesh(points=points, cells=[("triangle", mesh.triangles)], point_data=point_data)


def write_snapshot(path: Path, space: MixedSpace, state: FieldState) -> Path:
    """Legacy VTK ASCII unstructured grid."""
    path.parent.mkdir(parents=True, exist_ok=True)
    meshio.write(str(path), snapshot_mesh(space, state), file_format="vtk", binary=False)
    logger.debug("snapshot written", path=str(path), t=state.t)
    return path
