"""CSV, JSON and text rendering of run reports."""

import json
from collections.abc import Iterable, Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any

from .collocation import CollocationPoint
from .config import Settings
from .models import NORM_NAMES, ConvergenceRow, GluingCheck, SolveReport, SpaceSummary
from .utils import format_significant


class ReportFormatter:
    """Formats solver results as CSV tables, JSON sidecars and text summaries."""

    POINT_COLUMNS = ("x", "y", "patch", "zeta1", "zeta2", "tag")
    SOLVE_COLUMNS = ("domain", "problem", "scheme", "h", "dim", "rows", "rank", "square", "residual")

    def __init__(self, settings: Settings) -> None:
        """Initialize formatter.

        Args:
            settings: Application settings
        """
        self.settings = settings

    def _number(self, value: float | int | None) -> str:
        return format_significant(value, self.settings.significant_digits)

    @staticmethod
    def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
        return "\n".join([",".join(header), *(",".join(row) for row in rows)]) + "\n"

    def format_points(self, points: Sequence[CollocationPoint]) -> str:
        """Format collocation equations as CSV, one line per equation.

        Args:
            points: Equations in row order

        Returns:
            CSV text with header x,y,patch,zeta1,zeta2,tag
        """
        return self._csv(
            self.POINT_COLUMNS,
            (
                (
                    self._number(p.point[0]),
                    self._number(p.point[1]),
                    str(p.patch),
                    self._number(p.zeta[0]),
                    self._number(p.zeta[1]),
                    p.tag.value,
                )
                for p in points
            ),
        )

    def format_solves(self, reports: Sequence[SolveReport]) -> str:
        """Format solves as CSV rows of sizes and errors.

        Args:
            reports: Solve reports of one problem and scheme

        Returns:
            CSV text with header
        """
        names = [name for name in NORM_NAMES if reports and name in reports[0].errors.norms]
        return self._csv(
            (*self.SOLVE_COLUMNS, *names),
            (
                (
                    r.domain,
                    r.problem,
                    r.scheme,
                    r.mesh_size,
                    str(r.dimension),
                    str(r.rows),
                    str(r.rank),
                    str(r.square).lower(),
                    self._number(r.residual),
                    *(self._number(r.errors.norms[name]) for name in names),
                )
                for r in reports
            ),
        )

    def format_convergence(self, rows: Sequence[ConvergenceRow]) -> str:
        """Format a convergence study with pairwise orders.

        Args:
            rows: One row per mesh, coarse to fine

        Returns:
            CSV text; order cells of the first mesh are empty
        """
        names = [name for name in NORM_NAMES if rows and name in rows[0].errors.norms]
        header = ["h", "k", "dim", "rows", *names, *(f"order_{name}" for name in names)]
        return self._csv(
            header,
            (
                [
                    row.mesh_size,
                    str(row.k),
                    str(row.dimension),
                    str(row.rows),
                    *(self._number(row.errors.norms[name]) for name in names),
                    *(self._number(row.orders[name]) for name in names),
                ]
                for row in rows
            ),
        )

    def format_gluing(self, checks: Sequence[GluingCheck]) -> str:
        return self._csv(
            ("edge", "functions", "samples", "max_jump"),
            (
                (str(c.edge), str(c.functions), str(c.samples), self._number(c.max_jump))
                for c in checks
            ),
        )

    def format_space_info(self, summary: SpaceSummary) -> str:
        """Format the per-origin dimension breakdown of a space.

        Args:
            summary: Space summary

        Returns:
            Multi-line text ending with the total dimension
        """
        width = max((len(name) for name in summary.by_origin), default=0)
        lines = [f"Domain {summary.domain}, s = {summary.s}, h = {summary.mesh_size}"]
        lines += [f"  {name.ljust(width)} : {count}" for name, count in summary.by_origin.items()]
        lines.append(f"  {'total'.ljust(width)} : {summary.dimension}")
        return "\n".join(lines)

    @staticmethod
    def to_json(payload: Any) -> str:
        """Serialize a report, dataclass or list of dataclasses at full precision."""

        def convert(value: Any) -> Any:
            if hasattr(value, "to_dict"):
                return value.to_dict()
            if hasattr(value, "__dataclass_fields__"):
                return asdict(value)
            if isinstance(value, list | tuple):
                return [convert(v) for v in value]
            return value

        return json.dumps(convert(payload), indent=2, sort_keys=True, default=str) + "\n"

    def write_sidecar(self, csv_path: Path, payload: Any) -> Path:
        """Write the JSON sidecar next to a CSV report.

        Args:
            csv_path: Path of the CSV report
            payload: Report data

        Returns:
            Path of the JSON file
        """
        path = csv_path.with_suffix(".json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(payload), encoding="utf-8")
        return path
