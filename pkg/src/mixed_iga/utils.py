"""Utility functions for parsing and formatting."""

import math
from collections.abc import Sequence
from fractions import Fraction

from .exceptions import ParameterError


def parse_rational(value: str | int | float) -> Fraction:
    """Parse a decimal or "n/d" number exactly.

    Floats are converted through their shortest decimal representation so that
    ``0.1`` becomes ``1/10`` rather than the binary expansion.

    Args:
        value: Number given as int, float, decimal string or "n/d" string

    Returns:
        Exact rational value

    Raises:
        ParameterError: If the value cannot be parsed
    """
    if isinstance(value, bool):
        raise ParameterError(f"not a number: {value!r}")
    try:
        if isinstance(value, float):
            return Fraction(repr(value))
        if isinstance(value, int):
            return Fraction(value)
        return Fraction(value.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ParameterError(f"not a number: {value!r}") from e


def parse_mesh_size(value: str) -> int:
    """Parse a mesh size ``1/2^i`` and return the inner knot count.

    Args:
        value: Mesh size such as "1/16"

    Returns:
        Number of inner knots k with h = 1/(k+1)

    Raises:
        ParameterError: If the mesh size is not of the form 1/2^i with i >= 1
    """
    h = parse_rational(value)
    if h <= 0 or h.numerator != 1:
        raise ParameterError(f"mesh size must be 1/2^i, got {value}")
    n = h.denominator
    if n < 2 or n & (n - 1):
        raise ParameterError(f"mesh size must be 1/2^i, got {value}")
    return n - 1


def mesh_label(k: int) -> str:
    """Format the mesh size belonging to ``k`` inner knots, e.g. "1/16"."""
    return f"1/{k + 1}"


def estimate_orders(errors: Sequence[float]) -> list[float | None]:
    """Estimate pairwise convergence orders log2(e_2h / e_h).

    Args:
        errors: Errors on successively halved meshes

    Returns:
        One entry per mesh; the first is None, as is any pair with a zero error
    """
    orders: list[float | None] = [None]
    for coarse, fine in zip(errors, errors[1:], strict=False):
        if coarse > 0.0 and fine > 0.0:
            orders.append(math.log2(coarse / fine))
        else:
            orders.append(None)
    return orders


def format_significant(value: float | int | None, digits: int = 6) -> str:
    """Format a number with a fixed count of significant digits.

    Args:
        value: Number to format, None renders as an empty field
        digits: Significant digits

    Returns:
        Formatted string like "4.70000e-05"
    """
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        return str(value)
    return f"{value:.{digits - 1}e}"
