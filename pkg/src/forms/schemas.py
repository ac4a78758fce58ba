"""Coefficient laws and discrete fields"""

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from shared.exceptions import DimensionMismatchError
from space.schemas import DofMap


class CoefficientLaw(BaseModel):
    """
    Phase-dependent material coefficient.

    ``constant`` returns ``value`` everywhere, ``exp_pos`` returns e^phi and
    ``exp_neg`` returns e^-phi.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["constant", "exp_pos", "exp_neg"] = Field(
        default="constant", description="Law of the coefficient"
    )
    value: float = Field(default=1.0, description="Value of a constant law")

    @model_validator(mode="after")
    def check_positive(self) -> "CoefficientLaw":
        if self.kind == "constant" and not self.value > 0.0:
            raise ValueError("constant coefficient must be positive")
        return self

    def __call__(self, phi: NDArray[np.float64]) -> NDArray[np.float64]:
        phi = np.asarray(phi, dtype=float)
        if self.kind == "exp_pos":
            return np.exp(phi)
        if self.kind == "exp_neg":
            return np.exp(-phi)
        return np.full_like(phi, self.value)

    @classmethod
    def constant(cls, value: float = 1.0) -> "CoefficientLaw":
        return cls(kind="constant", value=value)


@dataclass(frozen=True)
class DiscreteField:
    """Coefficient vector of a finite element field."""

    dofmap: DofMap
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.values.shape != (self.dofmap.n_dofs,):
            raise DimensionMismatchError(
                f"{self.dofmap.kind.value} field needs {self.dofmap.n_dofs} values, "
                f"got shape {self.values.shape}"
            )
