"""Tests for truncated Taylor jets."""

import numpy as np
import pytest

from mixed_iga.exceptions import ParameterError
from mixed_iga.jets import Jet2


def jet(coefficients: dict[tuple[int, int], float], order: int = 3) -> Jet2:
    c = np.zeros((order + 1, order + 1, 1))
    for (i, j), value in coefficients.items():
        c[i, j, 0] = value
    return Jet2(c, order)


def test_product_of_polynomials():
    # (1 + δ1)(2 + δ2) = 2 + 2δ1 + δ2 + δ1δ2
    out = jet({(0, 0): 1, (1, 0): 1}) * jet({(0, 0): 2, (0, 1): 1})
    expected = {(0, 0): 2, (1, 0): 2, (0, 1): 1, (1, 1): 1}
    for (i, j), value in expected.items():
        assert out.coefficients[i, j, 0] == value
    assert out.coefficients.sum() == sum(expected.values())


def test_product_truncates_at_lowest_order():
    out = jet({(0, 0): 1, (1, 0): 1}, order=3) * jet({(0, 0): 1, (1, 0): 1}, order=1)
    assert out.order == 1
    assert out.coefficients[:, :, 0].tolist() == [[1.0, 0.0], [2.0, 0.0]]


def test_reciprocal_geometric_series():
    inv = jet({(0, 0): 1, (1, 0): -1}, order=4).reciprocal()
    np.testing.assert_allclose(inv.coefficients[:, 0, 0], [1, 1, 1, 1, 1])
    product = inv * jet({(0, 0): 1, (1, 0): -1}, order=4)
    np.testing.assert_allclose(product.coefficients[:, :, 0], np.eye(5)[:1].T @ np.eye(5)[:1], atol=1e-15)


def test_reciprocal_of_zero():
    with pytest.raises(ZeroDivisionError):
        jet({(1, 0): 1}).reciprocal()


def test_derivatives_round_trip_factorials():
    d = np.zeros((3, 3, 2))
    d[2, 0] = [4.0, 6.0]
    d[1, 1] = [3.0, -1.0]
    j = Jet2.from_derivatives(d, 2)
    np.testing.assert_allclose(j.coefficients[2, 0], [2.0, 3.0])
    np.testing.assert_allclose(j.derivative_value(2, 0), [4.0, 6.0])
    np.testing.assert_allclose(j.derivative_value(1, 1), [3.0, -1.0])


def test_derivative_lowers_order():
    # f = δ1²δ2, ∂1∂2 f = 2δ1
    f = jet({(2, 1): 1})
    g = f.partial(1, 1)
    assert g.order == 1
    assert g.coefficients[1, 0, 0] == 2.0
    assert g.value[0] == 0.0


def test_derivative_limits():
    with pytest.raises(ParameterError):
        jet({(0, 0): 1}, order=0).derivative(0)
    with pytest.raises(ParameterError):
        jet({(0, 0): 1}, order=2).derivative_value(2, 1)


def test_invalid_shape():
    with pytest.raises(ParameterError):
        Jet2(np.zeros((2, 3)), 1)


def test_constant_and_arithmetic():
    a = Jet2.constant(2.0, 2, (3,))
    b = Jet2.constant(5.0, 1, (3,))
    np.testing.assert_allclose((a + b).value, 7.0)
    np.testing.assert_allclose((a - b).value, -3.0)
    np.testing.assert_allclose((-a).scale(0.5).value, -1.0)
    assert (a + b).order == 1
