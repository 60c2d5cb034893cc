"""Tests for parsing and formatting helpers."""

from fractions import Fraction

import pytest

from mixed_iga.exceptions import ParameterError
from mixed_iga.utils import (
    estimate_orders,
    format_significant,
    mesh_label,
    parse_mesh_size,
    parse_rational,
)


class TestParseRational:
    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            ("3/5", Fraction(3, 5)),
            ("0.1", Fraction(1, 10)),
            (0.1, Fraction(1, 10)),
            (7, Fraction(7)),
            (" 21/20 ", Fraction(21, 20)),
        ],
    )
    def test_parses_exactly(self, value, expected):
        assert parse_rational(value) == expected

    @pytest.mark.parametrize("value", ["abc", "1/0", True])
    def test_rejects_garbage(self, value):
        with pytest.raises(ParameterError):
            parse_rational(value)


class TestMeshSize:
    @pytest.mark.parametrize(("value", "k"), [("1/2", 1), ("1/8", 7), ("1/16", 15), ("1/64", 63)])
    def test_ladder(self, value, k):
        assert parse_mesh_size(value) == k
        assert mesh_label(k) == value

    @pytest.mark.parametrize("value", ["1/3", "1", "0", "-1/8", "1/12"])
    def test_rejects_off_ladder(self, value):
        with pytest.raises(ParameterError):
            parse_mesh_size(value)


def test_estimate_orders_halving():
    orders = estimate_orders([1.6e-3, 1e-4, 6.25e-6])
    assert orders[0] is None
    assert orders[1] == pytest.approx(4.0)
    assert orders[2] == pytest.approx(4.0)


def test_estimate_orders_zero_error():
    assert estimate_orders([1.0, 0.0]) == [None, None]


@pytest.mark.parametrize(
    ("value", "digits", "expected"),
    [
        (4.7e-5, 6, "4.70000e-05"),
        (0.123456789, 3, "1.23e-01"),
        (12, 6, "12"),
        (None, 6, ""),
        (float("inf"), 6, "inf"),
    ],
)
def test_format_significant(value, digits, expected):
    assert format_significant(value, digits) == expected
