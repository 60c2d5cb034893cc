"""Configuration management using Pydantic Settings."""

from enum import Enum
from pathlib import Path
from typing import Annotated

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ParameterError
from .utils import parse_mesh_size


class Problem(str, Enum):
    """Model problem solved in strong form."""

    POISSON = "poisson"
    BIHARMONIC = "biharmonic"

    @property
    def smoothness(self) -> int:
        """Global smoothness s of the discrete space used for this problem."""
        return 2 if self is Problem.POISSON else 4

    @property
    def order(self) -> int:
        """Differential order of the operator."""
        return 2 if self is Problem.POISSON else 4


class Scheme(str, Enum):
    """Collocation point scheme."""

    GREVILLE = "greville"
    SUPERCONVERGENT = "superconvergent"
    SET2 = "set2"
    SET3 = "set3"

    @property
    def needs_two_patches(self) -> bool:
        """Whether the scheme is only defined for two-patch domains."""
        return self in (Scheme.SET2, Scheme.SET3)


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MIXED_IGA_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Numerical tolerances
    kernel_tolerance: Annotated[
        float,
        Field(
            default=1e-9,
            gt=0.0,
            lt=1e-3,
            description="Relative singular value threshold for vertex constraint kernels",
        ),
    ] = 1e-9

    rank_tolerance: Annotated[
        float,
        Field(
            default=1e-10,
            gt=0.0,
            lt=1e-3,
            description="Relative rank threshold for collocation matrices and rank audits",
        ),
    ] = 1e-10

    dedup_tolerance: Annotated[
        float,
        Field(
            default=1e-10,
            gt=0.0,
            lt=1e-4,
            description="Point merge distance relative to the domain diameter",
        ),
    ] = 1e-10

    linearity_tolerance: Annotated[
        float,
        Field(
            default=1e-9,
            gt=0.0,
            lt=1e-2,
            description="Absolute tolerance of the bilinear-like linearity checks",
        ),
    ] = 1e-9

    # Quadrature and audits
    quadrature_extra_points: Annotated[
        int,
        Field(
            default=2,
            ge=0,
            le=10,
            description="Gauss points per element and direction beyond the degree p2",
        ),
    ] = 2

    rank_audit_max_dim: Annotated[
        int,
        Field(
            default=1000,
            ge=0,
            description="Largest space dimension for which the scattered rank audit runs",
        ),
    ] = 1000

    # Output
    significant_digits: Annotated[
        int,
        Field(
            default=6,
            ge=2,
            le=17,
            description="Significant digits of numbers written to CSV reports",
        ),
    ] = 6

    output_dir: Annotated[
        Path,
        Field(
            default=Path("results"),
            description="Directory receiving JSON sidecars when no --out is given",
        ),
    ] = Path("results")

    # Logging
    log_level: Annotated[
        str,
        Field(
            default="INFO",
            description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
        ),
    ] = "INFO"

    def quadrature_points(self, degree: int) -> int:
        """Get the number of Gauss points per element for a spline degree."""
        return degree + self.quadrature_extra_points


class RunConfig(BaseModel):
    """A validated command-line request."""

    domain: str = "G"
    geometry_file: Path | None = None
    problem: Problem = Problem.POISSON
    scheme: Scheme = Scheme.SUPERCONVERGENT
    s: int | None = None
    mesh_sizes: list[str] = Field(default_factory=lambda: ["1/8", "1/16", "1/32", "1/64"])
    inner_knots: list[int] | None = None
    out: Path | None = None
    seed: int = 0
    quadrature_points: int | None = Field(default=None, ge=1, le=20)
    check_oracles: bool = False

    @field_validator("mesh_sizes")
    @classmethod
    def _mesh_sizes_on_ladder(cls, value: list[str]) -> list[str]:
        for size in value:
            try:
                parse_mesh_size(size)
            except ParameterError as e:
                raise ValueError(str(e)) from e
        return value

    @field_validator("domain")
    @classmethod
    def _domain_upper(cls, value: str) -> str:
        return value.strip().upper()

    @model_validator(mode="after")
    def _check_numbers(self) -> "RunConfig":
        if self.inner_knots is not None and any(k < 1 for k in self.inner_knots):
            raise ValueError("inner knot counts must be positive")
        if self.s is not None and self.s not in (2, 4):
            raise ValueError(f"smoothness must be 2 or 4, got {self.s}")
        return self

    @property
    def smoothness(self) -> int:
        """Smoothness s: the explicit --s, else fixed by the problem."""
        return self.s if self.s is not None else self.problem.smoothness

    def knot_counts(self) -> list[int]:
        """Inner knot counts k of the requested meshes, coarse to fine."""
        if self.inner_knots is not None:
            return sorted(self.inner_knots)
        return sorted(parse_mesh_size(size) for size in self.mesh_sizes)
