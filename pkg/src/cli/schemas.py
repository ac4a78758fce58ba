"""
Run configuration

One JSON document per run; command-line flags override file values.
"""

import json
import math
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from forms.schemas import CoefficientLaw
from scheme.schemas import SchemeParams
from shared.config import get_settings
from shared.exceptions import ConfigError

EXPONENTIAL_LAWS = ("paper-exp", "exp")


class RunConfig(BaseModel):
    """Everything a simulate, energy or converge run needs."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    mode: Literal["simulate", "energy", "converge"] = Field(
        default="simulate", description="Command the configuration is meant for"
    )
    n: int = Field(default=8, ge=1, description="Subdivisions per side (simulate, energy)")
    levels: list[int] = Field(default=[4, 8, 16], description="Mesh levels (converge)")
    dt: Optional[float] = Field(default=None, gt=0.0, description="Explicit time step")
    dt_rule: Literal["0.1h2"] = Field(default="0.1h2", description="Time step rule when dt unset")
    t_final: float = Field(default=0.5, ge=0.0, description="Final time")
    steps: Optional[int] = Field(default=None, ge=0, description="Step count, overrides t_final")

    eps: float = Field(default=0.05, gt=0.0, description="Interfacial thickness")
    lam: float = Field(default=1.0, gt=0.0, alias="lambda", description="Mixing energy density")
    s_c: float = Field(default=1.0, gt=0.0, description="Coupling coefficient")
    coefficients: str = Field(
        default="paper-exp",
        description="'paper-exp' (alias 'exp') or 'constant:<value>'",
    )

    picard_tol: float = Field(default=1e-10, gt=0.0, lt=1.0)
    picard_max: int = Field(default=50, ge=1)
    on_nonconvergence: Literal["abort", "warn"] = "abort"
    cubic_linearization: Literal["newton", "picard"] = "newton"
    check_residuals: bool = True

    initial: Optional[Literal["mms", "cosine", "pure", "random"]] = Field(
        default=None,
        description="Initial data ('mms' also switches on the manufactured sources); "
        "unset means mms for simulate and cosine for energy",
    )
    seed: int = Field(default=0, ge=0, description="Seed of random initial data")

    output_dir: str = Field(default_factory=lambda: get_settings().OUTPUT_DIR)
    snapshot_every: int = Field(default=0, ge=0, description="Snapshot interval in steps, 0 = off")
    workers: int = Field(default_factory=lambda: get_settings().MAX_WORKERS, ge=1)

    @field_validator("coefficients")
    @classmethod
    def validate_coefficients(cls, v: str) -> str:
        if v in EXPONENTIAL_LAWS:
            return v
        kind, _, value = v.partition(":")
        try:
            number = float(value)
        except ValueError:
            number = math.nan
        if kind != "constant" or not number > 0.0 or not math.isfinite(number):
            raise ValueError(
                "coefficients must be 'paper-exp', 'exp' or 'constant:<positive value>'"
            )
        return v

    @field_validator("levels")
    @classmethod
    def validate_levels(cls, v: list[int]) -> list[int]:
        if any(level < 1 for level in v):
            raise ValueError("mesh levels must be positive")
        return v

    def laws(self) -> tuple[CoefficientLaw, CoefficientLaw, CoefficientLaw]:
        """kappa, nu, eta."""
        if self.coefficients in EXPONENTIAL_LAWS:
            return (
                CoefficientLaw(kind="exp_pos"),
                CoefficientLaw(kind="exp_neg"),
                CoefficientLaw(kind="exp_pos"),
            )
        unit = CoefficientLaw.constant(float(self.coefficients.partition(":")[2]))
        return unit, unit, unit

    def time_grid(self, h: float) -> tuple[float, int]:
        """
        Time step and step count for mesh size h.

        An explicit ``steps`` wins over ``t_final``; otherwise the step is
        shortened, if needed, so that an integer number of steps ends at t_final.
        """
        dt = self.dt if self.dt is not None else 0.1 * h * h
        if self.steps is not None:
            return dt, self.steps
        if self.t_final == 0.0:
            return dt, 0
        steps = round(self.t_final / dt)
        if steps < 1 or abs(steps * dt - self.t_final) > 1e-9 * self.t_final:
            steps = math.ceil(self.t_final / dt)
            dt = self.t_final / steps
        return dt, steps

    def scheme_params(self, dt: float) -> SchemeParams:
        kappa, nu, eta = self.laws()
        return SchemeParams(
            eps=self.eps,
            lam=self.lam,
            s_c=self.s_c,
            dt=dt,
            kappa=kappa,
            nu=nu,
            eta=eta,
            picard_tol=self.picard_tol,
            picard_max=self.picard_max,
            t_final=self.t_final,
            on_nonconvergence=self.on_nonconvergence,
            cubic_linearization=self.cubic_linearization,
        )


def load_config(
    path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """
    Read a JSON configuration and apply overrides.

    Overrides whose value is None are ignored.

    Raises:
        ConfigError: Unreadable file, malformed JSON or invalid values
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"configuration {path} must hold a JSON object")
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


class EnergyStudy(BaseModel):
    """Outcome of an energy-stability run."""

    initial_energy: float
    energies: list[float]
    slack: float
    violations: list[int] = Field(default_factory=list, description="Steps where E increased")

    @property
    def passed(self) -> bool:
        return not self.violations
