"""Tests for patches, multi-patch topology and geometry files."""

import json

import numpy as np
import pytest

from mixed_iga.dihedral import Corner, Side
from mixed_iga.exceptions import (
    GeometryFileError,
    GluingError,
    RegularityError,
    TopologyError,
)
from mixed_iga.geometry import (
    BilinearMapping,
    EdgeKind,
    InnerEdgeSpec,
    SplineMapping,
    build_domain,
    domain_from_dict,
    export_geometry,
    load_geometry,
)
from mixed_iga.spline_kernel import make_space


def bilinear(f00, f10, f01, f11) -> BilinearMapping:
    return BilinearMapping(((f00, f01), (f10, f11)))


class TestPatch:
    def test_identity_mapping(self, unit_square):
        patch = unit_square.patches[0]
        pts = np.array([[0.2, 0.7], [1.0, 0.0]])
        np.testing.assert_allclose(patch(pts), pts)
        np.testing.assert_allclose(patch.determinant(pts), 1.0)
        assert patch.orientation == 1

    def test_jet_of_bilinear_map(self):
        patch = build_domain("q", [bilinear((0, 0), (2, 0), (0, 1), (3, 2))]).patches[0]
        j = patch.jet(np.array([[0.5, 0.5]]), 2)
        np.testing.assert_allclose(j[1, 0, 0], [2.5, 0.5])
        np.testing.assert_allclose(j[1, 1, 0], [1.0, 1.0])
        assert np.all(j[2, 0] == 0.0)

    @pytest.mark.parametrize(
        ("side", "normal"),
        [(Side.LEFT, (-1, 0)), (Side.RIGHT, (1, 0)), (Side.BOTTOM, (0, -1)), (Side.TOP, (0, 1))],
    )
    def test_outward_normals(self, unit_square, side, normal):
        t = np.linspace(0.1, 0.9, 4)
        c = np.full_like(t, 1.0 if side.at_one else 0.0)
        pts = np.column_stack([c, t] if side.axis == 0 else [t, c])
        np.testing.assert_allclose(unit_square.patches[0].outward_normals(side, pts), [normal] * 4, atol=1e-14)

    def test_normals_of_negative_patch(self, domain_g):
        patch = domain_g.patches[0]
        assert patch.orientation == -1
        pts = np.array([[0.5, 1.0]])
        normal = patch.outward_normals(Side.TOP, pts)[0]
        np.testing.assert_allclose(normal, [0.0, 1.0], atol=1e-14)

    def test_folded_patch(self):
        with pytest.raises(RegularityError):
            build_domain("bowtie", [bilinear((0, 0), (1, 0), (1, 1), (0, 1))])


class TestTopology:
    def test_two_squares(self, two_squares):
        assert len(two_squares.inner_edges) == 1
        assert len(two_squares.boundary_edges) == 6
        assert len(two_squares.vertices) == 6
        assert two_squares.edge_at(0, Side.RIGHT)[0] is EdgeKind.INNER
        assert two_squares.boundary_sides(1) == [Side.RIGHT, Side.BOTTOM, Side.TOP]
        assert sorted(v.valency for v in two_squares.vertices) == [1, 1, 1, 1, 2, 2]
        assert two_squares.diameter == pytest.approx(np.sqrt(5.0))

    def test_edge_frames_agree(self, two_squares):
        edge = two_squares.inner_edges[0]
        t = np.linspace(0.0, 1.0, 5)
        eta = np.column_stack([np.zeros_like(t), t])
        a, b = (two_squares.patches[p] for p in edge.patches)
        np.testing.assert_allclose(a(edge.frames[0].apply(eta)), b(edge.frames[1].apply(eta)))

    def test_gluing_of_matching_squares(self, two_squares):
        data = two_squares.gluing_data[0]
        assert data.lam == pytest.approx(1.0)
        assert (data.alpha[0].at0, data.alpha[1].at1) == pytest.approx((-1.0, 1.0))
        assert data.beta[0].at0 == pytest.approx(0.0, abs=1e-14)

    def test_single_patch_treats_all_sides_inner(self, unit_square):
        assert unit_square.is_single_patch
        assert unit_square.patch_flags(0).edge_count == 4
        assert unit_square.boundary_sides(0) == list(Side)
        assert unit_square.vertex_at(0, Corner.TOP_RIGHT).point == (1.0, 1.0)

    def test_explicit_edge_must_match(self):
        with pytest.raises(TopologyError):
            build_domain(
                "bad",
                [bilinear((0, 0), (1, 0), (0, 1), (1, 1)), bilinear((1, 0), (2, 0), (1, 1), (2, 1))],
                [InnerEdgeSpec(0, Side.TOP, 1, Side.LEFT)],
            )

    def test_nonlinear_edge_determinant(self):
        net = (
            ((1.0, 0.0), (1.0, 0.5), (1.0, 1.0)),
            ((1.5, 0.0), (2.5, 0.5), (1.5, 1.0)),
            ((2.0, 0.0), (3.0, 0.5), (2.0, 1.0)),
        )
        with pytest.raises(GluingError):
            build_domain(
                "bulged",
                [bilinear((0, 0), (1, 0), (0, 1), (1, 1)), SplineMapping(make_space(2, 1, 0), net)],
            )


class TestGeometryFile:
    def test_export_round_trip(self, domain_g, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(export_geometry(domain_g), encoding="utf-8")
        loaded = load_geometry(path)
        assert len(loaded.patches) == 2
        pts = np.random.default_rng(0).uniform(size=(6, 2))
        for a, b in zip(domain_g.patches, loaded.patches, strict=True):
            np.testing.assert_allclose(a(pts), b(pts))
        assert loaded.inner_edges[0].patches == domain_g.inner_edges[0].patches

    def test_exact_coordinates_exported_as_fractions(self, domain_g):
        data = json.loads(export_geometry(domain_g))
        assert data["patches"][0]["corners"][0] == ["3", "3"]

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(GeometryFileError):
            load_geometry(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(GeometryFileError):
            load_geometry(path)

    @pytest.mark.parametrize(
        "data",
        [
            {},
            {"patches": []},
            {"patches": [{"type": "bezier"}]},
            {"patches": [{"type": "bilinear", "corners": [[0, 0], [1, 0]]}]},
            {"patches": [{"type": "bilinear", "corners": [[0, 0], [1, 0], [0, "x"], [1, 1]]}]},
            {"patches": [{"type": "spline", "degree": 2, "regularity": 1, "k": 0, "control_net": []}]},
        ],
    )
    def test_schema_violations(self, data):
        with pytest.raises(GeometryFileError):
            domain_from_dict(data)

    def test_bad_inner_edge_entry(self):
        data = {
            "patches": [
                {"type": "bilinear", "corners": [[0, 0], [0, 1], [1, 0], [1, 1]]},
                {"type": "bilinear", "corners": [[1, 0], [1, 1], [2, 0], [2, 1]]},
            ],
            "inner_edges": [{"patch_a": 0, "side_a": "diagonal", "patch_b": 1, "side_b": "left"}],
        }
        with pytest.raises(GeometryFileError):
            domain_from_dict(data)
