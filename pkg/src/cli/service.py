"""
Run orchestration for the three commands.

Each command builds its levels, drives ``SchemeSolver`` and hands the
results to ``cli.export``; console summaries are rendered with rich.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import structlog
from numpy.typing import NDArray
from rich.console import Console
from rich.table import Table

from cli.export import write_diagnostics, write_energy, write_errors, write_rates, write_snapshot
from cli.schemas import EnergyStudy, RunConfig
from forms.service import FormAssembler
from mesh.service import unit_square_mesh
from scheme.schemas import FieldState, SchemeParams, Sources, StepDiagnostics
from scheme.service import SchemeSolver
from shared.exceptions import ChmhdError, ConfigError, EnergyStabilityError
from space.schemas import MixedSpace
from space.service import build_mixed_space
from verify.mms import manufactured_solution
from verify.schemas import ErrorReport, RateTable
from verify.service import energy, error_norms, observed_rates, weak_divergence

logger = structlog.get_logger(__name__)
console = Console()

# E^n <= E^{n-1} + ENERGY_SLACK |E^0| + ENERGY_FLOOR
ENERGY_SLACK = 1e-8
ENERGY_FLOOR = 1e-14

Array = NDArray[np.float64]
PlaneFunction = Callable[[Array, Array], object]


@dataclass(frozen=True)
class InitialData:
    phi: PlaneFunction
    u: PlaneFunction
    B: PlaneFunction
    sources: Sources


def build_level(n: int) -> tuple[MixedSpace, FormAssembler]:
    space = build_mixed_space(unit_square_mesh(n))
    return space, FormAssembler(space)


def _zero_vector(x: Array, y: Array) -> tuple[Array, Array]:
    return np.zeros_like(x), np.zeros_like(x)


def initial_data(kind: str, params: SchemeParams, seed: int = 0) -> InitialData:
    """
    Initial fields by name.

    ``mms`` is the manufactured solution at t = 0 together with its sources;
    ``cosine``, ``pure`` and ``random`` are unforced. Random data is a seeded
    smooth phase field with |phi| <= 0.8 and small solenoidal u, B that meet
    the boundary conditions exactly.
    """
    pi = np.pi
    if kind == "mms":
        exact = manufactured_solution(params)
        return InitialData(exact.initial_phi, exact.initial_u, exact.initial_B, exact.sources())
    if kind == "cosine":
        return InitialData(
            lambda x, y: np.cos(pi * x) * np.cos(pi * y), _zero_vector, _zero_vector, Sources()
        )
    if kind == "pure":
        return InitialData(lambda x, y: np.ones_like(x), _zero_vector, _zero_vector, Sources())
    if kind == "random":
        rng = np.random.default_rng(seed)
        modes = np.arange(4)
        amplitudes = rng.uniform(-1.0, 1.0, (4, 4)) / (1.0 + np.add.outer(modes**2, modes**2))
        amplitudes *= 0.8 / np.sum(np.abs(amplitudes))
        c_u, c_b = 0.1 * rng.uniform(-1.0, 1.0, 2)

        def phi(x: Array, y: Array) -> Array:
            cx = np.cos(pi * np.multiply.outer(x, modes))
            cy = np.cos(pi * np.multiply.outer(y, modes))
            return np.einsum("...k,...l,kl->...", cx, cy, amplitudes)

        def velocity(x: Array, y: Array) -> tuple[Array, Array]:
            # curl of the stream function c sin^2(pi x) sin^2(pi y)
            return (
                c_u * pi * np.sin(pi * x) ** 2 * np.sin(2 * pi * y),
                -c_u * pi * np.sin(2 * pi * x) * np.sin(pi * y) ** 2,
            )

        def magnetic(x: Array, y: Array) -> tuple[Array, Array]:
            return (
                c_b * np.sin(pi * x) * np.cos(pi * y),
                -c_b * np.cos(pi * x) * np.sin(pi * y),
            )

        return InitialData(phi, velocity, magnetic, Sources())
    raise ConfigError(f"unknown initial data {kind!r}")


def _tracked_errors(report: ErrorReport) -> dict[str, float]:
    return {
        f"{field}_{norm}": error
        for field, norm, error in report.rows()
        if norm != "L2" or field == "p"
    }


def _initial_row(solver: SchemeSolver, state: FieldState) -> StepDiagnostics:
    return StepDiagnostics(
        step=0,
        t=state.t,
        picard_iterations=0,
        increment=0.0,
        converged=True,
        energy=energy(state, solver.params, solver.assembler),
        max_weak_div=weak_divergence(state.u, solver.assembler),
        mass_drift=0.0,
        dissipation=0.0,
    )


# -- converge ----------------------------------------------------------------------


def run_level(config: RunConfig, n: int) -> ErrorReport:
    """Manufactured-solution run on one mesh level, errors at the final time."""
    log = logger.bind(level=n)
    try:
        space, assembler = build_level(n)
        dt, steps = config.time_grid(1.0 / n)
        params = config.scheme_params(dt)
        exact = manufactured_solution(params)
        solver = SchemeSolver(space, params, assembler, config.check_residuals)
        state = solver.initialize(exact.initial_phi, exact.initial_u, exact.initial_B)
        log.info("level started", dt=dt, steps=steps)
        final, _ = solver.run(state, steps, exact.sources())
        report = error_norms(final, exact, final.t, assembler, dt)
    except ChmhdError as exc:
        exc.add_note(f"while running convergence level n={n}")
        raise
    log.info(
        "level completed",
        t=report.t,
        **_tracked_errors(report),
    )
    return report


def _check_levels(levels: list[int]) -> None:
    if len(levels) < 2:
        raise ConfigError(f"a convergence study needs at least two levels, got {levels}")
    for coarse, fine in zip(levels, levels[1:]):
        if fine != 2 * coarse:
            raise ConfigError(f"levels must double from one to the next, got {levels}")


def run_levels(config: RunConfig) -> list[ErrorReport]:
    """All levels, in a process pool when more than one worker is configured."""
    levels = list(config.levels)
    workers = min(config.workers, len(levels))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_level, repeat(config), levels))
    return [run_level(config, n) for n in levels]


def print_rates(table: RateTable) -> None:
    grid = Table(title="Observed convergence rates")
    grid.add_column("field")
    grid.add_column("norm")
    grid.add_column("levels", justify="right")
    grid.add_column("error (coarse)", justify="right")
    grid.add_column("error (fine)", justify="right")
    grid.add_column("rate", justify="right")
    for row in table.tracked():
        grid.add_row(
            row.field,
            row.norm,
            f"{row.n_coarse} -> {row.n_fine}",
            f"{row.error_coarse:.4e}",
            f"{row.error_fine:.4e}",
            f"{row.rate:.3f}",
        )
    console.print(grid)


def cmd_converge(config: RunConfig) -> RateTable:
    """
    Manufactured-solution convergence study.

    Writes errors.csv and rates.csv to the output directory.

    Raises:
        ConfigError: Fewer than two levels, or levels not doubling
        PicardConvergenceError: A level aborted (with level context attached)
    """
    _check_levels(list(config.levels))
    reports = run_levels(config)
    table = observed_rates(reports)
    out = Path(config.output_dir)
    write_errors(out / "errors.csv", reports)
    write_rates(out / "rates.csv", table)
    print_rates(table)
    return table


# -- energy ------------------------------------------------------------------------


def check_energy(initial_energy: float, energies: list[float]) -> EnergyStudy:
    """Flag every step whose energy exceeds its predecessor beyond the slack."""
    slack = ENERGY_SLACK * abs(initial_energy) + ENERGY_FLOOR
    violations: list[int] = []
    previous = initial_energy
    for step, value in enumerate(energies, start=1):
        if not value <= previous + slack:
            violations.append(step)
        previous = value
    return EnergyStudy(
        initial_energy=initial_energy, energies=energies, slack=slack, violations=violations
    )


def cmd_energy(config: RunConfig) -> EnergyStudy:
    """
    Unforced run checking that the discrete energy does not increase.

    Writes energy.csv; reports PASS or FAIL.

    Raises:
        ConfigError: Manufactured initial data requested
        EnergyStabilityError: Energy increased beyond the slack
    """
    kind = config.initial or "cosine"
    if kind == "mms":
        raise ConfigError("energy runs are unforced; choose cosine, pure or random initial data")
    space, assembler = build_level(config.n)
    dt, steps = config.time_grid(1.0 / config.n)
    params = config.scheme_params(dt)
    data = initial_data(kind, params, config.seed)
    solver = SchemeSolver(space, params, assembler, config.check_residuals)
    state = solver.initialize(data.phi, data.u, data.B)
    e0 = energy(state, params, assembler)
    logger.info("energy run started", n=config.n, dt=dt, steps=steps, initial=kind, energy=e0)

    _, history = solver.run(state, steps, data.sources)
    write_energy(Path(config.output_dir) / "energy.csv", e0, history)
    study = check_energy(e0, [d.energy for d in history])

    verdict = "[green]PASS[/green]" if study.passed else "[red]FAIL[/red]"
    console.print(
        f"energy n={config.n} dt={dt:g} steps={steps}: E0={e0:.6e} "
        f"E_end={study.energies[-1] if study.energies else e0:.6e} {verdict}"
    )
    if not study.passed:
        raise EnergyStabilityError(
            f"energy increased beyond slack {study.slack:.2e} at steps {study.violations}"
        )
    return study


# -- simulate ----------------------------------------------------------------------


def cmd_simulate(config: RunConfig) -> list[StepDiagnostics]:
    """
    Plain run to t_final with per-step diagnostics and optional snapshots.

    Writes diag.csv (first row is the initial state) and, when
    ``snapshot_every`` > 0, snap_XXXX.vtk at step 0 and every
    ``snapshot_every`` steps.
    """
    kind = config.initial or "mms"
    space, assembler = build_level(config.n)
    dt, steps = config.time_grid(1.0 / config.n)
    params = config.scheme_params(dt)
    data = initial_data(kind, params, config.seed)
    solver = SchemeSolver(space, params, assembler, config.check_residuals)
    state = solver.initialize(data.phi, data.u, data.B)
    out = Path(config.output_dir)
    logger.info("simulation started", n=config.n, dt=dt, steps=steps, initial=kind)

    def snapshot(current: FieldState, step: int) -> None:
        if config.snapshot_every and step % config.snapshot_every == 0:
            write_snapshot(out / f"snap_{step:04d}.vtk", space, current)

    snapshot(state, 0)
    rows = [_initial_row(solver, state)]
    final, history = solver.run(
        state, steps, data.sources, on_step=lambda current, d: snapshot(current, d.step)
    )
    rows.extend(history)
    write_diagnostics(out / "diag.csv", rows)

    if kind == "mms":
        report = error_norms(final, manufactured_solution(params), final.t, assembler, dt)
        logger.info(
            "simulation errors",
            t=final.t,
            **_tracked_errors(report),
        )
    console.print(
        f"simulate n={config.n} steps={steps} t={final.t:g} E={rows[-1].energy:.6e} "
        f"max_weak_div={max(r.max_weak_div for r in rows):.2e}"
    )
    return rows


COMMANDS: dict[str, Callable[[RunConfig], object]] = {
    "converge": cmd_converge,
    "energy": cmd_energy,
    "simulate": cmd_simulate,
}


def run_command(name: str, config: RunConfig) -> Optional[object]:
    """Dispatch to a command by name."""
    if name not in COMMANDS:
        raise ConfigError(f"unknown command {name!r}")
    return COMMANDS[name](config)
