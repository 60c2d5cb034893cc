"""Tests for the C^s-smooth multi-patch space."""

from itertools import combinations

import numpy as np
import pytest

from mixed_iga.domains import builtin_domain
from mixed_iga.exceptions import KernelRankError, ParameterError
from mixed_iga.mixed_space import EdgeFlags, dimension
from mixed_iga.operators import GeometryJets, physical_derivative
from mixed_iga.smooth_space import (
    OriginKind,
    build_smooth_space,
    check_gluing_conditions,
    constraint_kernel,
    minimum_inner_knots,
    vertex_constraint_system,
)


@pytest.fixture(scope="module")
def two_square_space(two_squares):
    return build_smooth_space(two_squares, 2, 6)


class TestDimension:
    def test_single_patch_is_full_mixed_space(self, unit_square):
        space = build_smooth_space(unit_square, 2, 5)
        assert space.dimension == dimension(2, 5, 4, 0)
        assert space.offsets[OriginKind.PATCH] == slice(0, space.dimension)

    @pytest.mark.parametrize(("s", "expected"), [(2, 744), (4, 955)])
    def test_domain_g(self, domain_g, s, expected):
        assert build_smooth_space(domain_g, s, 15).dimension == expected

    @pytest.mark.slow
    @pytest.mark.parametrize(
        ("s", "k", "expected"), [(2, 31, 2488), (4, 31, 2859), (2, 63, 9048), (4, 63, 9739)]
    )
    def test_domain_g_fine(self, domain_g, s, k, expected):
        assert build_smooth_space(domain_g, s, k).dimension == expected

    def test_origins_partition_basis(self, two_square_space):
        sizes = [sl.stop - sl.start for sl in two_square_space.offsets.values()]
        assert sum(sizes) == two_square_space.dimension
        assert all(size > 0 for size in sizes)
        assert [f.id for f in two_square_space.basis] == list(range(two_square_space.dimension))

    @pytest.mark.parametrize(("s", "k"), [(3, 9), (2, 4), (4, 8)])
    def test_invalid_parameters(self, two_squares, s, k):
        with pytest.raises(ParameterError):
            build_smooth_space(two_squares, s, k)

    @pytest.mark.parametrize(("s", "k"), [(2, 5), (4, 9), (4, 11)])
    def test_corner_blocks_must_not_meet(self, two_squares, s, k):
        with pytest.raises(ParameterError, match="valency-one"):
            build_smooth_space(two_squares, s, k)

    def test_minimum_inner_knots(self, unit_square, two_squares):
        assert minimum_inner_knots(unit_square, 4) == 9
        assert minimum_inner_knots(two_squares, 2) == 6
        assert minimum_inner_knots(two_squares, 4) == 12
        assert minimum_inner_knots(builtin_domain("B"), 4) == 9

    @pytest.mark.parametrize(("s", "k"), [(2, 6), (4, 12)])
    def test_smallest_mesh_has_independent_basis(self, domain_g, app_settings, s, k):
        space = build_smooth_space(domain_g, s, k, app_settings)
        assert space.coefficient_rank(app_settings.rank_tolerance) == space.dimension


class TestSmoothness:
    def test_derivatives_match_across_edge(self, two_square_space):
        t = np.linspace(0.05, 0.95, 7)
        left = np.column_stack([np.ones_like(t), t])
        right = np.column_stack([np.zeros_like(t), t])
        for d1 in range(3):
            for d2 in range(3 - d1):
                a = two_square_space.evaluate(0, left, d1, d2).toarray()
                b = two_square_space.evaluate(1, right, d1, d2).toarray()
                scale = max(np.abs(a).max(), 1.0)
                assert np.abs(a - b).max() < 1e-9 * scale, (d1, d2)

    @pytest.mark.parametrize("s", [2, 4])
    def test_gluing_checks(self, domain_g, s):
        checks = check_gluing_conditions(domain_g, s, 2 * s + 3)
        assert len(checks) == 1
        assert checks[0].functions > 0
        assert checks[0].max_jump < 1e-8

    def test_reproduces_cubic_polynomial(self, two_square_space):
        rng = np.random.default_rng(4)
        pts = rng.uniform(size=(60, 2))
        rows = np.vstack([two_square_space.evaluate(p, pts).toarray() for p in (0, 1)])
        x = np.concatenate([pts[:, 0], 1.0 + pts[:, 0]])
        y = np.concatenate([pts[:, 1], pts[:, 1]])
        target = x**3 - 2.0 * x * y**2 + y
        coefficients, *_ = np.linalg.lstsq(rows, target, rcond=None)
        assert np.abs(rows @ coefficients - target).max() < 1e-8

    def test_function_values_match_evaluate(self, two_square_space):
        c = np.arange(two_square_space.dimension, dtype=float)
        pts = np.array([[0.3, 0.4]])
        expected = two_square_space.evaluate(1, pts, 1, 0) @ c
        np.testing.assert_allclose(two_square_space.function_values(c, 1, pts, 1, 0), expected)


class TestConstraintKernel:
    def test_normalized_basis(self):
        matrix = np.array([[1.0, -1.0, 0.0]])
        kernel = constraint_kernel(matrix, 1e-9)
        assert kernel.shape == (3, 2)
        np.testing.assert_allclose(matrix @ kernel, 0.0, atol=1e-14)
        assert any(
            np.allclose(kernel[list(rows)], np.eye(2)) for rows in combinations(range(3), 2)
        )

    def test_empty_system(self):
        np.testing.assert_array_equal(constraint_kernel(np.zeros((0, 3)), 1e-9), np.eye(3))

    def test_full_rank_has_trivial_kernel(self):
        assert constraint_kernel(np.eye(3), 1e-9).shape == (3, 0)

    def test_ambiguous_rank(self):
        with pytest.raises(KernelRankError, match="ambiguous"):
            constraint_kernel(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-9]]), 1e-9, "vertex 0")

    def test_column_scale_does_not_decide_rank(self):
        assert constraint_kernel(np.diag([1e8, 0.5, 1e-3]), 1e-9).shape == (3, 0)

    def test_kernel_of_badly_scaled_columns(self):
        matrix = np.array([[1e8, -1.0, 0.0], [0.0, 2.0, -3e-4]])
        kernel = constraint_kernel(matrix, 1e-9)
        assert kernel.shape == (3, 1)
        scale = np.abs(matrix).max() * np.abs(kernel).max()
        assert np.abs(matrix @ kernel).max() <= 1e-12 * scale
        assert np.isclose(kernel, 1.0).any()


# F carries its own knots at multiples of 1/4
STAR_DOMAIN_MIN_KNOTS = {"B": 0, "C": 0, "F": 11}


@pytest.fixture(scope="module", params=sorted(STAR_DOMAIN_MIN_KNOTS))
def star_domain(request):
    return builtin_domain(request.param)


def star_knots(domain, s: int) -> int:
    return max(minimum_inner_knots(domain, s), STAR_DOMAIN_MIN_KNOTS[domain.name])


class TestHighValencyVertices:
    def test_vertex_constraints_hold(self, star_domain):
        s = 4
        k = star_knots(star_domain, s)
        checked = 0
        for vertex in star_domain.vertices:
            if vertex.valency == 1 or (vertex.valency == 2 and vertex.boundary):
                continue
            system = vertex_constraint_system(star_domain, vertex, s, k)
            kernel = constraint_kernel(system.matrix, 1e-9, f"vertex {vertex.index}")
            assert kernel.shape[1] > 0
            scale = np.abs(system.matrix).max() * np.abs(kernel).max()
            assert np.abs(system.matrix @ kernel).max() <= 1e-10 * scale
            checked += 1
        assert checked >= 1

    @pytest.mark.parametrize("s", [2, 4])
    def test_smooth_across_every_inner_edge(self, star_domain, app_settings, s):
        space = build_smooth_space(star_domain, s, star_knots(star_domain, s), app_settings)
        t = np.linspace(0.02, 0.98, 9)
        eta = np.column_stack([np.zeros_like(t), t])
        for edge in star_domain.inner_edges:
            sides = []
            for tau in (0, 1):
                patch = star_domain.patches[edge.patches[tau]]
                points = edge.frames[tau].apply(eta)
                geo = GeometryJets.at(patch, points)
                sides.append(
                    np.stack(
                        [
                            space.apply(patch.index, physical_derivative(geo, a, b), points).toarray()
                            for a in range(s + 1)
                            for b in range(s + 1 - a)
                        ]
                    )
                )
            scale = np.maximum(np.abs(sides[0]), np.abs(sides[1])).max(axis=(0, 1))
            scale = np.where(scale > 0.0, scale, 1.0)
            assert (np.abs(sides[0] - sides[1]) / scale).max() < 1e-7, edge.index


def test_export_lines(two_square_space):
    lines = list(two_square_space.export_lines())
    assert lines[0] == "function,origin,patch,j1,j2,coefficient"
    entries = sum(piece.flat.size for f in two_square_space.basis for piece in f.pieces)
    assert len(lines) == entries + 1
    first = lines[1].split(",")
    assert first[1] == "patch:0"


def test_rank_audit_reports_full_rank(two_square_space, app_settings):
    assert two_square_space.coefficient_rank(app_settings.rank_tolerance) == two_square_space.dimension


def test_patch_flags_drive_variant(two_squares):
    assert two_squares.patch_flags(0) == EdgeFlags.of("right")
