"""Tests for report models."""

import pytest

from mixed_iga.models import ConvergenceRow, ErrorReport, SolveReport, SpaceSummary
from mixed_iga.smooth_space import build_smooth_space


def report(k: int, l2: float, rows: int = 10, dimension: int = 10) -> SolveReport:
    return SolveReport(
        domain="G",
        problem="poisson",
        scheme="superconvergent",
        s=2,
        k=k,
        mesh_size=f"1/{k + 1}",
        dimension=dimension,
        rows=rows,
        rank=dimension,
        residual=1e-12,
        errors=ErrorReport(l2=l2, h1=10 * l2, h2=100 * l2),
    )


class TestErrorReport:
    def test_from_sums(self):
        errors = ErrorReport.from_sums({"l2": 4.0, "h1": 1.0, "h2": 9.0}, {"l2": 16.0, "h1": 4.0, "h2": 0.0})
        assert (errors.l2, errors.h1, errors.h2) == (0.5, 0.5, 3.0)
        assert errors.h3 is None

    def test_norms_skip_missing(self):
        errors = ErrorReport(1.0, 2.0, 3.0)
        assert list(errors.norms) == ["l2", "h1", "h2"]
        assert errors.worst() == 3.0
        assert list(ErrorReport(1.0, 2.0, 3.0, 4.0, 5.0).norms) == ["l2", "h1", "h2", "h3", "h4"]


class TestSolveReport:
    def test_square(self):
        assert report(7, 1e-3).square
        assert not report(7, 1e-3, rows=12).square

    def test_to_dict(self):
        data = report(7, 1e-3, rows=12).to_dict()
        assert data["square"] is False
        assert data["errors"] == {"l2": 1e-3, "h1": 1e-2, "h2": 1e-1}
        assert data["mesh_size"] == "1/8"


class TestConvergenceRow:
    def test_orders_against_previous_mesh(self):
        rows = ConvergenceRow.from_reports([report(15, 1e-4), report(7, 1.6e-3), report(31, 6.25e-6)])
        assert [r.k for r in rows] == [7, 15, 31]
        assert rows[0].orders["l2"] is None
        assert rows[1].orders["l2"] == pytest.approx(4.0)
        assert rows[2].orders["h2"] == pytest.approx(4.0)

    def test_empty(self):
        assert ConvergenceRow.from_reports([]) == []


def test_space_summary(unit_square):
    summary = SpaceSummary.from_space(build_smooth_space(unit_square, 2, 5))
    assert summary.mesh_size == "1/6"
    assert summary.by_origin["patch"] == summary.dimension
    assert set(summary.by_origin) == {"patch", "inner-edge", "boundary-edge", "vertex"}
