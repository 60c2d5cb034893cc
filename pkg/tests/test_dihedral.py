"""Tests for the symmetries of the unit square."""

import numpy as np
import pytest

from mixed_iga.dihedral import (
    ALL_DIHEDRALS,
    IDENTITY,
    Corner,
    Dihedral,
    Side,
    corner_frame,
    edge_frame,
)


def test_side_geometry():
    assert Side.LEFT.axis == 0 and not Side.LEFT.at_one
    assert Side.TOP.axis == 1 and Side.TOP.at_one
    assert Side.RIGHT.midpoint == (1.0, 0.5)
    assert Corner.TOP_RIGHT.sides == (Side.RIGHT, Side.TOP)
    assert Corner.at(1, 0) is Corner.BOTTOM_RIGHT


def test_eight_distinct_symmetries():
    sample = np.array([0.1, 0.3])
    images = {tuple(np.round(d.apply(sample), 12)) for d in ALL_DIHEDRALS}
    assert len(images) == 8


@pytest.mark.parametrize("d", ALL_DIHEDRALS)
def test_inverse(d):
    pts = np.random.default_rng(1).uniform(size=(5, 2))
    np.testing.assert_allclose(d.inverse().apply(d.apply(pts)), pts)
    assert d.compose(d.inverse()) == IDENTITY


@pytest.mark.parametrize("d", ALL_DIHEDRALS)
def test_sides_and_corners_permute(d):
    assert {d.map_side(side) for side in Side} == set(Side)
    assert {d.map_corner(c) for c in Corner} == set(Corner)


@pytest.mark.parametrize("d", ALL_DIHEDRALS)
def test_transform_coefficients_matches_indices(d):
    n = 4
    canonical = np.arange(n * n, dtype=float).reshape(n, n)
    patch = d.transform_coefficients(canonical)
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = d.map_indices(a, b, n)
    np.testing.assert_array_equal(patch[i, j], canonical[a, b])


@pytest.mark.parametrize(
    ("d", "multi", "expected"),
    [
        (Dihedral(flip_u=True), (1, 0), (1, 0, -1)),
        (Dihedral(swap=True), (1, 0), (0, 1, 1)),
        (Dihedral(swap=True, flip_v=True), (1, 0), (0, 1, -1)),
        (Dihedral(flip_u=True, flip_v=True), (1, 1), (1, 1, 1)),
        (Dihedral(flip_v=True), (0, 3), (0, 3, -1)),
    ],
)
def test_derivative_map(d, multi, expected):
    assert d.derivative_map(*multi) == expected


@pytest.mark.parametrize("side", list(Side))
@pytest.mark.parametrize("reverse", [False, True])
def test_edge_frame_places_side(side, reverse):
    t = np.linspace(0.0, 1.0, 5)
    pts = edge_frame(side, reverse).apply(np.column_stack([np.zeros_like(t), t]))
    assert np.all(pts[:, side.axis] == (1.0 if side.at_one else 0.0))
    along = pts[:, 1 - side.axis]
    np.testing.assert_allclose(along, t[::-1] if reverse else t)


@pytest.mark.parametrize("corner", list(Corner))
def test_corner_frame(corner):
    for side in corner.sides:
        d = corner_frame(corner, side)
        np.testing.assert_allclose(d.apply(np.array([0.0, 0.0])), corner.point)
        assert d.map_side(Side.LEFT) is side


def test_corner_frame_rejects_foreign_side():
    with pytest.raises(ValueError):
        corner_frame(Corner.BOTTOM_LEFT, Side.TOP)
