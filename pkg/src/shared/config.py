"""
Application Configuration

This module handles process-wide solver settings using Pydantic Settings
for type-safe environment variable management. Per-run parameters (mesh
levels, time step, physical coefficients) live in ``cli.schemas.RunConfig``.
"""

from functools import lru_cache
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Largest degree covered by fem_basis.quadrature.
MAX_QUADRATURE_DEGREE = 10


class Settings(BaseSettings):
    """
    Solver settings loaded from environment variables.

    All settings are type-safe and validated using Pydantic.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application settings
    APP_NAME: str = Field(default="chmhd", description="Application name")
    APP_VERSION: str = Field(default="0.1.0", description="Application version")

    # Logging
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO", description="Logging level"
    )
    LOG_FORMAT: Literal["console", "json"] = Field(
        default="console", description="Log renderer"
    )

    # Output
    OUTPUT_DIR: str = Field(default="results/", description="Default output directory")

    # Discretization
    ASSEMBLY_QUADRATURE_DEGREE: int = Field(
        default=6, description="Quadrature degree used for matrix assembly"
    )
    ERROR_QUADRATURE_DEGREE: int = Field(
        default=8, description="Quadrature degree for error norms and energy"
    )

    # Linear algebra
    PIVOT_THRESHOLD: float = Field(
        default=1e-14, description="Relative pivot threshold flagging singular systems"
    )
    RESIDUAL_TOLERANCE: float = Field(
        default=1e-10, description="Maximum accepted relative residual per solve"
    )

    # Parallel convergence levels
    MAX_WORKERS: int = Field(default=1, description="Worker processes for level sweeps")

    @field_validator("ASSEMBLY_QUADRATURE_DEGREE", "ERROR_QUADRATURE_DEGREE")
    @classmethod
    def validate_quadrature_degree(cls, v: int) -> int:
        """Validate that the degree is covered by the quadrature table."""
        if not 1 <= v <= MAX_QUADRATURE_DEGREE:
            raise ValueError(f"quadrature degree must lie in [1, {MAX_QUADRATURE_DEGREE}]")
        return v

    @field_validator("PIVOT_THRESHOLD", "RESIDUAL_TOLERANCE")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        """Tolerances must be positive and below one."""
        if not 0.0 < v < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")
        return v

    @field_validator("MAX_WORKERS")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("MAX_WORKERS must be at least 1")
        return v


@lru_cache
def get_settings() -> Settings:
    """
    Get solver settings.

    Returns:
        Settings: Cached settings instance
    """
    return Settings()
