"""Tests for collocation point layouts, tagging and global assembly."""

import numpy as np
import pytest

from mixed_iga.collocation import (
    HIGH_DEGREE_ROOTS,
    PointScheme,
    PointTag,
    assemble_global,
    clustered_interior,
    first_layer,
    greville_layout,
    high_superconvergent,
    max_regularity_sequence,
    mixed_greville,
    set2_set3,
    superconvergent_layout,
    tag_points,
)
from mixed_iga.config import Problem, Scheme
from mixed_iga.dihedral import Side
from mixed_iga.exceptions import CollocationError
from mixed_iga.mixed_space import EdgeFlags, build, mixed_spaces


def assert_symmetric(points: np.ndarray) -> None:
    np.testing.assert_allclose(points, 1.0 - points[::-1], atol=1e-14)


class TestRoots:
    def test_high_degree_roots_s2(self):
        roots = np.array(HIGH_DEGREE_ROOTS[2])
        np.testing.assert_allclose(np.polyval([15, 0, -12, 0, 1], roots), 0.0, atol=1e-13)

    def test_high_degree_roots_s4(self):
        roots = np.array(HIGH_DEGREE_ROOTS[4])
        np.testing.assert_allclose(np.polyval([4823, 0, -5915, 0, 1665, 0, -61], roots), 0.0, atol=1e-9)

    @pytest.mark.parametrize("s", [2, 4])
    def test_roots_symmetric(self, s):
        assert_symmetric((np.array(HIGH_DEGREE_ROOTS[s]) + 1.0) / 2.0)


class TestUnivariateLayouts:
    @pytest.mark.parametrize("k", [2, 3, 8, 15])
    def test_clustered_interior(self, k):
        pts = clustered_interior((-1 / np.sqrt(3), 1 / np.sqrt(3)), k)
        h = 1.0 / (k + 1)
        assert pts.size == k
        assert np.all(np.diff(pts) > 0.0)
        assert pts.min() >= h and pts.max() <= 1.0 - h
        assert_symmetric(pts)

    @pytest.mark.parametrize("s", [2, 4])
    @pytest.mark.parametrize("k", [5, 15])
    def test_high_superconvergent(self, s, k):
        pts = high_superconvergent(s, k)
        assert pts.size == mixed_spaces(s, k)[1].dimension
        assert pts[0] == 0.0 and pts[-1] == 1.0
        assert np.all(np.diff(pts) > 0.0)
        assert_symmetric(pts)

    @pytest.mark.parametrize("s", [2, 4])
    @pytest.mark.parametrize("ends", [(False, False), (True, False), (True, True)])
    def test_superconvergent_layout_sizes(self, s, ends):
        layout = superconvergent_layout(s, 9, *ends)
        low, high = mixed_spaces(s, 9)
        assert (layout.low.size, layout.high.size) == (low.dimension, high.dimension)
        inner = layout.low[1:-1]
        assert np.all(np.diff(inner) > 0.0)

    def test_greville_truncated_abscissae(self):
        h = 1.0 / 16
        assert greville_layout(2, 15, True, True).low[1] == pytest.approx(3 * h / 5)
        s4 = greville_layout(4, 15, True, False)
        assert s4.low[3] == pytest.approx(6 * h / 5)
        np.testing.assert_allclose(s4.low[1:3], s4.high[5:7])

    @pytest.mark.parametrize("s", [2, 4])
    def test_greville_ordering_at_inner_ends(self, s):
        layout = greville_layout(s, 15, True, True)
        n1, n2 = layout.low.size, layout.high.size
        assert layout.high[: s + 1].max() < layout.low[1]
        assert np.all(np.diff(layout.low[1 : n1 - 1]) > 0.0)
        assert layout.low[n1 - 2] < layout.high[n2 - 1 - s :].min()

    def test_greville_without_inner_end_is_plain(self):
        low, _ = mixed_spaces(2, 7)
        np.testing.assert_allclose(greville_layout(2, 7, False, False).low, low.greville_points)

    @pytest.mark.parametrize("s", [2, 4])
    def test_max_regularity_sequences(self, s):
        k = 15
        for ell in range(s + 1):
            pts = max_regularity_sequence(s, ell, k)
            assert pts.size == 2 * s + 2 - ell + k
            assert (pts[0], pts[-1]) == (0.0, 1.0)
            assert np.all(np.diff(pts) > 0.0)
            assert_symmetric(pts)

    def test_clustered_interior_keeps_left_roots_left_of_the_middle(self):
        roots = (-1 / np.sqrt(3), 1 / np.sqrt(3))
        k = 7
        h = 1.0 / (k + 1)
        pts = clustered_interior(roots, k)
        # six inner spans: three on each side, no central span
        expected_left = [(span + (1 - 1 / np.sqrt(3)) / 2) * h for span in (1, 2, 3)]
        np.testing.assert_allclose(pts[:3], expected_left)
        assert pts[3] == pytest.approx(0.5)

    def test_clustered_interior_central_span_keeps_all_roots(self):
        roots = HIGH_DEGREE_ROOTS[2]
        k = 8
        h = 1.0 / (k + 1)
        pts = clustered_interior(roots, k)
        assert pts.size == (k - 1) * 3 + 1
        central = (4 + (np.array(roots) + 1.0) / 2.0) * h
        assert np.isin(central.round(14), pts.round(14)).all()

    @pytest.mark.parametrize("k", [7, 15])
    def test_clustered_interior_one_point_per_span_away_from_the_middle(self, k):
        pts = clustered_interior((-1 / np.sqrt(3), 1 / np.sqrt(3)), k)
        spans = np.floor(pts * (k + 1) + 1e-12).astype(int)
        counts = np.bincount(spans, minlength=k + 1)
        assert counts[0] == 0 and counts[k] == 0
        assert set(counts[1:k].tolist()) <= {1, 2}
        assert (counts[1:k] == 2).sum() <= 1

    def test_max_regularity_end_spans_keep_both_roots(self):
        k = 15
        h = 1.0 / (k + 1)
        pts = max_regularity_sequence(4, 0, k)
        r = 0.504918567512653
        expected = [(span + (1 + sign * r) / 2) * h for span in range(3) for sign in (-1, 1)]
        np.testing.assert_allclose(pts[1:7], expected)

    def test_max_regularity_knots_next_to_the_ends(self):
        k = 15
        h = 1.0 / (k + 1)
        pts = max_regularity_sequence(4, 1, k)
        midpoints = (np.arange(k + 1) + 0.5) * h
        assert np.isin(midpoints.round(14), pts.round(14)).all()
        np.testing.assert_allclose(pts[[2, 4, 6]], [h, 2 * h, 3 * h])

    @pytest.mark.parametrize(("s", "ell", "k"), [(4, 0, 4), (4, 1, 5)])
    def test_max_regularity_needs_enough_knots(self, s, ell, k):
        with pytest.raises(CollocationError, match="need k >="):
            max_regularity_sequence(s, ell, k)

    def test_mixed_greville_one_point_per_function(self):
        space = build(2, 7, EdgeFlags.of("left", "bottom"))
        pts = mixed_greville(space)
        assert pts.shape == (space.dimension, 2)
        assert np.unique(pts.round(12), axis=0).shape[0] == space.dimension


class TestTagging:
    def grid(self, n: int = 5) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n)
        return np.array([(u, v) for u in t for v in t])

    def test_poisson(self):
        tags = tag_points(self.grid(), [Side.LEFT, Side.BOTTOM], Problem.POISSON)
        assert len(tags) == 25
        dirichlet = [i for i, (tag, _, _) in enumerate(tags) if tag is PointTag.DIRICHLET]
        assert len(dirichlet) == 9
        assert all(tag is not PointTag.NEUMANN for tag, _, _ in tags)

    def test_biharmonic_layer_gets_neumann_at_projection(self):
        zeta = self.grid()
        tags = tag_points(zeta, [Side.BOTTOM], Problem.BIHARMONIC)
        neumann = [i for i, (tag, _, _) in enumerate(tags) if tag is PointTag.NEUMANN]
        assert sorted(tuple(zeta[i]) for i in neumann) == [(u, 0.25) for u in (0.0, 0.25, 0.5, 0.75, 1.0)]
        for i in neumann:
            _, side, at = tags[i]
            assert side is Side.BOTTOM
            assert at == (zeta[i, 0], 0.0)
        assert sum(tag is PointTag.DIRICHLET for tag, _, _ in tags) == 5

    def test_biharmonic_corner_goes_to_the_smaller_side(self):
        zeta = self.grid()
        tags = tag_points(zeta, [Side.BOTTOM, Side.LEFT], Problem.BIHARMONIC)
        # (0.25, 0.25) neighbours both sides
        assert tags[6] == (PointTag.NEUMANN, Side.LEFT, (0.0, 0.25))
        neumann = [i for i, (tag, _, _) in enumerate(tags) if tag is PointTag.NEUMANN]
        assert len(neumann) == 7
        assert sum(tag is PointTag.INTERIOR for tag, _, _ in tags) == 9

    def test_boundary_point_is_dirichlet_only(self):
        zeta = self.grid()
        tags = tag_points(zeta, [Side.LEFT, Side.BOTTOM], Problem.BIHARMONIC)
        assert tags[0] == (PointTag.DIRICHLET, Side.LEFT, (0.0, 0.0))
        assert tags[10][0] is PointTag.DIRICHLET and tags[10][1] is Side.BOTTOM

    def test_first_layer_skips_lines_without_a_boundary_point(self):
        zeta = np.array([(0.5, 0.1), (0.5, 0.2), (0.3, 0.0), (0.3, 0.4)])
        assert first_layer(zeta, [Side.BOTTOM]) == {3: Side.BOTTOM}


def edge_points(points, domain, patch):
    edge = domain.inner_edges[0]
    side = edge.sides[edge.patches.index(patch)]
    value = 1.0 if side.at_one else 0.0
    return [p for p in points if p.patch == patch and p.zeta[side.axis] == value and p.tag is PointTag.INTERIOR]


class TestAssembly:
    def test_domain_g_poisson(self, domain_g):
        points = assemble_global(domain_g, PointScheme(Scheme.SUPERCONVERGENT, 2, 15), Problem.POISSON)
        assert len(points) == 939
        order = [(p.tag is not PointTag.INTERIOR, p.index) for p in points]
        assert order == sorted(order)
        for p in points:
            if p.tag is PointTag.DIRICHLET:
                assert p.side is not None and p.edge is not None
                axis_value = p.zeta[p.side.axis]
                assert axis_value == (1.0 if p.side.at_one else 0.0)

    @pytest.mark.slow
    @pytest.mark.parametrize(("k", "rows"), [(31, 2875), (63, 9819)])
    def test_domain_g_poisson_fine(self, domain_g, k, rows):
        points = assemble_global(domain_g, PointScheme(Scheme.SUPERCONVERGENT, 2, k), Problem.POISSON)
        assert len(points) == rows

    def test_domain_g_biharmonic(self, domain_g):
        points = assemble_global(
            domain_g, PointScheme(Scheme.SUPERCONVERGENT, 4, 15), Problem.BIHARMONIC
        )
        assert len(points) == 1605
        assert len({p.index for p in points}) == len(points)
        neumann = [p for p in points if p.tag is PointTag.NEUMANN]
        assert neumann
        for p in neumann:
            assert p.side is not None and p.edge is not None
            assert p.zeta[p.side.axis] == (1.0 if p.side.at_one else 0.0)
            x = domain_g.patches[p.patch](np.array([p.zeta]))[0]
            np.testing.assert_allclose(x, p.point, atol=1e-12)

    def test_one_patch_biharmonic_is_square(self, unit_square):
        k = 11
        points = assemble_global(unit_square, PointScheme(Scheme.SUPERCONVERGENT, 4, k), Problem.BIHARMONIC)
        assert len(points) == build(4, k, unit_square.patch_flags(0)).dimension
        neumann = [p for p in points if p.tag is PointTag.NEUMANN]
        assert neumann and all(p.zeta[p.side.axis] in (0.0, 1.0) for p in neumann)
        assert len({p.index for p in points}) == len(points)

    def test_shared_points_kept_once(self, two_squares):
        points = assemble_global(two_squares, PointScheme(Scheme.GREVILLE, 2, 7), Problem.POISSON)
        interior = np.array([p.point for p in points if p.tag is PointTag.INTERIOR])
        assert np.unique(interior.round(10), axis=0).shape[0] == interior.shape[0]
        on_edge = [p for p in points if abs(p.point[0] - 1.0) < 1e-12]
        assert on_edge and all(p.patch == 0 for p in on_edge)

    @pytest.mark.parametrize(("s", "problem", "rows"), [(2, Problem.POISSON, 804), (4, Problem.BIHARMONIC, 1070)])
    def test_set2_counts(self, domain_g, s, problem, rows):
        points = set2_set3(domain_g, s, 15, 2, problem)
        assert len(points) == rows

    def test_set2_collocates_the_edge_from_both_patches(self, domain_g):
        points = set2_set3(domain_g, 2, 15, 2, Problem.POISSON)
        first = edge_points(points, domain_g, 0)
        second = edge_points(points, domain_g, 1)
        # 21 points of S^{5,4} on the edge, the two ends on the boundary
        assert len(first) == len(second) == 19
        np.testing.assert_allclose(
            sorted(p.point for p in first), sorted(p.point for p in second), atol=1e-12
        )

    @pytest.mark.parametrize(("s", "problem", "dimension"), [(2, Problem.POISSON, 744), (4, Problem.BIHARMONIC, 955)])
    def test_set3_is_square(self, domain_g, s, problem, dimension):
        points = set2_set3(domain_g, s, 15, 3, problem, dimension=dimension)
        assert len(points) == dimension
        located = np.array([p.point for p in points if p.tag is not PointTag.NEUMANN])
        assert np.unique(located.round(10), axis=0).shape[0] == located.shape[0]

    @pytest.mark.parametrize(("s", "problem", "thinned"), [(2, Problem.POISSON, 744), (4, Problem.BIHARMONIC, 955)])
    def test_set3_halves_the_columns_without_adjustment(self, domain_g, s, problem, thinned):
        assert len(set2_set3(domain_g, s, 15, 3, problem)) == thinned

    def test_set3_splits_the_edge_between_the_patches(self, domain_g):
        points = set2_set3(domain_g, 2, 15, 3, Problem.POISSON, dimension=744)
        first = edge_points(points, domain_g, 0)
        second = edge_points(points, domain_g, 1)
        assert len(first) + len(second) == 19
        assert abs(len(first) - len(second)) == 1

    def test_set3_adjusts_to_the_dimension(self, domain_g):
        points = set2_set3(domain_g, 2, 15, 3, Problem.POISSON, dimension=740)
        assert len(points) == 740
        points = set2_set3(domain_g, 2, 15, 3, Problem.POISSON, dimension=750)
        assert len(points) == 750

    @pytest.mark.slow
    @pytest.mark.parametrize(
        ("which", "k", "rows"), [(2, 31, 2596), (3, 31, 2488), (2, 63, 9252), (3, 63, 9048)]
    )
    def test_two_patch_sets_fine(self, domain_g, which, k, rows):
        dimension = rows if which == 3 else None
        assert len(set2_set3(domain_g, 2, k, which, Problem.POISSON, dimension=dimension)) == rows

    def test_set2_on_one_patch_fails(self, unit_square):
        with pytest.raises(CollocationError, match="two patches"):
            assemble_global(unit_square, PointScheme(Scheme.SET2, 2, 15), Problem.POISSON)

    def test_set_selector(self, domain_g):
        with pytest.raises(CollocationError):
            set2_set3(domain_g, 2, 15, 1, Problem.POISSON)

    @pytest.mark.parametrize(("s", "k"), [(3, 15), (2, 1)])
    def test_invalid_scheme(self, domain_g, s, k):
        with pytest.raises(CollocationError):
            PointScheme(Scheme.SUPERCONVERGENT, s, k).validate(domain_g)
