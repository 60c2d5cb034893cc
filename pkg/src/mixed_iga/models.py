"""Data models for run reports."""

import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

from .utils import estimate_orders, mesh_label

if TYPE_CHECKING:
    from .smooth_space import SmoothSpace

NORM_NAMES = ("l2", "h1", "h2", "h3", "h4")


@dataclass(frozen=True)
class GluingCheck:
    """Largest relative derivative jump of the functions of one inner edge."""

    edge: int
    functions: int
    samples: int
    max_jump: float


@dataclass(frozen=True)
class ErrorReport:
    """Relative errors in L² and the H^m-seminorm equivalents.

    h2 measures Δ, h3 measures ∇Δ and h4 measures Δ²; the last two are only
    computed for s = 4.
    """

    l2: float
    h1: float
    h2: float
    h3: float | None = None
    h4: float | None = None

    @classmethod
    def from_sums(
        cls, errors: dict[str, float], exact: dict[str, float]
    ) -> "ErrorReport":
        """Create an ErrorReport from squared error and reference integrals.

        A vanishing reference norm leaves the absolute error in place.
        """
        values: dict[str, float] = {}
        for name, err in errors.items():
            ref = exact.get(name, 0.0)
            values[name] = math.sqrt(err / ref) if ref > 0.0 else math.sqrt(err)
        return cls(**values)

    @property
    def norms(self) -> dict[str, float]:
        """The computed norms, in increasing derivative order."""
        values = asdict(self)
        return {name: values[name] for name in NORM_NAMES if values[name] is not None}

    def worst(self) -> float:
        return max(self.norms.values())


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one collocation solve."""

    domain: str
    problem: str
    scheme: str
    s: int
    k: int
    mesh_size: str
    dimension: int
    rows: int
    rank: int
    residual: float
    errors: ErrorReport
    timings: dict[str, float] = field(default_factory=dict)
    oracle_error: float | None = None

    @property
    def square(self) -> bool:
        return self.rows == self.dimension

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["square"] = self.square
        data["errors"] = self.errors.norms
        return data


@dataclass(frozen=True)
class ConvergenceRow:
    """One mesh of a convergence study with orders against the previous mesh."""

    mesh_size: str
    k: int
    dimension: int
    rows: int
    errors: ErrorReport
    orders: dict[str, float | None]

    @classmethod
    def from_reports(cls, reports: list[SolveReport]) -> list["ConvergenceRow"]:
        """Create rows from reports on successively halved meshes."""
        ordered = sorted(reports, key=lambda r: r.k)
        names = list(ordered[0].errors.norms) if ordered else []
        per_norm = {
            name: estimate_orders([r.errors.norms[name] for r in ordered]) for name in names
        }
        return [
            cls(
                mesh_size=report.mesh_size,
                k=report.k,
                dimension=report.dimension,
                rows=report.rows,
                errors=report.errors,
                orders={name: per_norm[name][i] for name in names},
            )
            for i, report in enumerate(ordered)
        ]


@dataclass(frozen=True)
class SpaceSummary:
    """Dimension of W^s split by the origin of its basis functions."""

    domain: str
    s: int
    k: int
    dimension: int
    by_origin: dict[str, int]

    @classmethod
    def from_space(cls, space: "SmoothSpace") -> "SpaceSummary":
        """Create a SpaceSummary from a built space."""
        counts = {kind.value: part.stop - part.start for kind, part in space.offsets.items()}
        return cls(
            domain=space.domain.name,
            s=space.s,
            k=space.k,
            dimension=space.dimension,
            by_origin=counts,
        )

    @property
    def mesh_size(self) -> str:
        return mesh_label(self.k)
