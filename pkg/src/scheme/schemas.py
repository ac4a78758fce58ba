"""Scheme parameters, field states and per-step diagnostics"""

from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from forms.schemas import CoefficientLaw

SourceFunction = Callable[..., object]


class SchemeParams(BaseModel):
    """
    Physical and iteration parameters of the time-stepping scheme.

    Defaults are the manufactured-solution configuration: S_c = 1,
    eps = 0.05, lambda = 1, kappa = e^phi, nu = e^-phi, eta = e^phi.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    eps: float = Field(default=0.05, gt=0.0, description="Interfacial thickness")
    lam: float = Field(default=1.0, gt=0.0, alias="lambda", description="Mixing energy density")
    s_c: float = Field(default=1.0, gt=0.0, description="Coupling coefficient")
    dt: float = Field(default=1e-3, gt=0.0, description="Time step")
    kappa: CoefficientLaw = Field(default=CoefficientLaw(kind="exp_pos"), description="Mobility")
    nu: CoefficientLaw = Field(default=CoefficientLaw(kind="exp_neg"), description="Viscosity")
    eta: CoefficientLaw = Field(
        default=CoefficientLaw(kind="exp_pos"), description="Magnetic diffusivity"
    )
    picard_tol: float = Field(
        default=1e-10, gt=0.0, lt=1.0, description="Relative increment tolerance"
    )
    picard_max: int = Field(default=50, ge=1, description="Picard iteration cap")
    t_final: float = Field(default=0.5, ge=0.0, description="Final time")
    on_nonconvergence: Literal["abort", "warn"] = Field(
        default="abort", description="Policy when Picard hits its cap"
    )
    cubic_linearization: Literal["newton", "picard"] = Field(
        default="newton", description="Linearization of the implicit cubic inside Picard"
    )

    @classmethod
    def constant_coefficients(cls, **kwargs: object) -> "SchemeParams":
        """Parameters with kappa = nu = eta = 1."""
        unit = CoefficientLaw.constant(1.0)
        return cls(kappa=unit, nu=unit, eta=unit, **kwargs)  # type: ignore[arg-type]


@dataclass
class FieldState:
    """Coefficient vectors of all unknowns at one time level."""

    t: float
    phi: NDArray[np.float64]
    mu: NDArray[np.float64]
    u: NDArray[np.float64]
    p: NDArray[np.float64]
    B: NDArray[np.float64]

    def copy(self) -> "FieldState":
        return replace(
            self,
            phi=self.phi.copy(),
            mu=self.mu.copy(),
            u=self.u.copy(),
            p=self.p.copy(),
            B=self.B.copy(),
        )

    def as_dict(self) -> dict[str, NDArray[np.float64]]:
        return {"phi": self.phi, "mu": self.mu, "u": self.u, "p": self.p, "B": self.B}


@dataclass(frozen=True)
class Sources:
    """
    Right-hand-side closures of the phase, momentum and induction equations.

    Each is called as f(x, y, t); vector sources return a component pair.
    ``None`` means no forcing.
    """

    g_phi: Optional[SourceFunction] = None
    g_u: Optional[SourceFunction] = None
    g_B: Optional[SourceFunction] = None


@dataclass
class StepDiagnostics:
    """Everything recorded about one accepted time step."""

    step: int
    t: float
    picard_iterations: int
    increment: float
    converged: bool
    energy: float
    max_weak_div: float
    mass_drift: float
    dissipation: float
    residuals: list[float] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)
