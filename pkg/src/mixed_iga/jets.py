"""Truncated bivariate Taylor expansions evaluated at many points at once."""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .exceptions import ParameterError


@dataclass(frozen=True, eq=False)
class Jet2:
    """Taylor coefficients c[i, j] of f(ξ0 + δ) ≈ Σ c[i, j] δ1^i δ2^j, i + j <= order.

    The leading two axes index (i, j); any trailing axes form a batch, usually
    one entry per evaluation point.
    """

    coefficients: np.ndarray
    order: int

    def __post_init__(self) -> None:
        shape = self.coefficients.shape
        if len(shape) < 2 or shape[0] != shape[1] or shape[0] < self.order + 1:
            raise ParameterError(f"jet of order {self.order} needs a square leading block")

    @classmethod
    def from_derivatives(cls, derivatives: np.ndarray, order: int) -> "Jet2":
        """Build from partial derivatives D[d1, d2, ...] with d1 + d2 <= order."""
        c = np.zeros((order + 1, order + 1, *derivatives.shape[2:]))
        for i in range(order + 1):
            for j in range(order + 1 - i):
                c[i, j] = derivatives[i, j] / (factorial(i) * factorial(j))
        return cls(c, order)

    @classmethod
    def constant(cls, value: np.ndarray | float, order: int, batch: tuple[int, ...] = ()) -> "Jet2":
        c = np.zeros((order + 1, order + 1, *batch))
        c[0, 0] = value
        return cls(c, order)

    @property
    def value(self) -> np.ndarray:
        return self.coefficients[0, 0]

    def derivative_value(self, d1: int, d2: int) -> np.ndarray:
        """∂^{(d1,d2)}f at the expansion points."""
        if d1 + d2 > self.order:
            raise ParameterError(f"derivative ({d1},{d2}) exceeds jet order {self.order}")
        return self.coefficients[d1, d2] * (factorial(d1) * factorial(d2))

    def _pair(self, other: "Jet2") -> tuple[int, np.ndarray, np.ndarray]:
        m = min(self.order, other.order)
        return m, self.coefficients[: m + 1, : m + 1], other.coefficients[: m + 1, : m + 1]

    def __add__(self, other: "Jet2") -> "Jet2":
        m, a, b = self._pair(other)
        return Jet2(a + b, m)

    def __sub__(self, other: "Jet2") -> "Jet2":
        m, a, b = self._pair(other)
        return Jet2(a - b, m)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.coefficients, self.order)

    def scale(self, factor: float | np.ndarray) -> "Jet2":
        return Jet2(self.coefficients * factor, self.order)

    def __mul__(self, other: "Jet2") -> "Jet2":
        m, a, b = self._pair(other)
        out = np.zeros_like(a * b)
        for i in range(m + 1):
            for j in range(m + 1 - i):
                for p in range(i + 1):
                    for q in range(j + 1):
                        out[i, j] += a[p, q] * b[i - p, j - q]
        return Jet2(out, m)

    def reciprocal(self) -> "Jet2":
        """Jet of 1/f; f must not vanish at the expansion points."""
        c = self.coefficients
        if np.any(c[0, 0] == 0.0):
            raise ZeroDivisionError("reciprocal of a jet with vanishing value")
        m = self.order
        out = np.zeros_like(c)
        out[0, 0] = 1.0 / c[0, 0]
        for total in range(1, m + 1):
            for i in range(total, -1, -1):
                j = total - i
                acc = np.zeros_like(c[0, 0])
                for p in range(i + 1):
                    for q in range(j + 1):
                        if p or q:
                            acc = acc + c[p, q] * out[i - p, j - q]
                out[i, j] = -acc * out[0, 0]
        return Jet2(out, m)

    def derivative(self, axis: int) -> "Jet2":
        """Jet of ∂f/∂ξ_{axis+1}, one order lower."""
        if self.order == 0:
            raise ParameterError("cannot differentiate a jet of order 0")
        m = self.order - 1
        out = np.zeros((m + 1, m + 1, *self.coefficients.shape[2:]))
        for i in range(m + 1):
            for j in range(m + 1 - i):
                if axis == 0:
                    out[i, j] = (i + 1) * self.coefficients[i + 1, j]
                else:
                    out[i, j] = (j + 1) * self.coefficients[i, j + 1]
        return Jet2(out, m)

    def partial(self, d1: int, d2: int) -> "Jet2":
        out = self
        for _ in range(d1):
            out = out.derivative(0)
        for _ in range(d2):
            out = out.derivative(1)
        return out
