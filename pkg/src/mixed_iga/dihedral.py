"""The eight symmetries of the unit square.

A :class:`Dihedral` maps canonical coordinates η to patch coordinates ξ:
first the two coordinates are exchanged if ``swap`` is set, then ξ1 and/or ξ2
are reflected (x -> 1 - x). Canonical configurations (an inner edge at η1 = 0,
a vertex at the origin, the fixed Appendix layouts of the mixed space) are
carried to any actual configuration by one of these maps.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Side(str, Enum):
    """Sides of the parameter square."""

    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"

    @property
    def axis(self) -> int:
        """Coordinate that is constant on the side."""
        return 0 if self in (Side.LEFT, Side.RIGHT) else 1

    @property
    def at_one(self) -> bool:
        """Whether the constant coordinate equals 1."""
        return self in (Side.RIGHT, Side.TOP)

    @property
    def midpoint(self) -> tuple[float, float]:
        constant = 1.0 if self.at_one else 0.0
        return (constant, 0.5) if self.axis == 0 else (0.5, constant)


class Corner(str, Enum):
    """Corners of the parameter square."""

    BOTTOM_LEFT = "bottom-left"
    BOTTOM_RIGHT = "bottom-right"
    TOP_LEFT = "top-left"
    TOP_RIGHT = "top-right"

    @property
    def point(self) -> tuple[int, int]:
        return {
            Corner.BOTTOM_LEFT: (0, 0),
            Corner.BOTTOM_RIGHT: (1, 0),
            Corner.TOP_LEFT: (0, 1),
            Corner.TOP_RIGHT: (1, 1),
        }[self]

    @property
    def sides(self) -> tuple[Side, Side]:
        """The two sides meeting at the corner, the ξ1 = const side first."""
        u, v = self.point
        return (Side.RIGHT if u else Side.LEFT, Side.TOP if v else Side.BOTTOM)

    @classmethod
    def at(cls, u: int, v: int) -> "Corner":
        return next(c for c in cls if c.point == (u, v))


def side_at(point: tuple[float, float]) -> Side:
    """Side whose midpoint is ``point``."""
    return next(side for side in Side if np.allclose(side.midpoint, point))


@dataclass(frozen=True)
class Dihedral:
    """Symmetry ξ = D(η) of [0,1]²."""

    swap: bool = False
    flip_u: bool = False
    flip_v: bool = False

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map canonical points of shape (..., 2) to patch points."""
        pts = np.asarray(points, dtype=float)
        u, v = (pts[..., 1], pts[..., 0]) if self.swap else (pts[..., 0], pts[..., 1])
        if self.flip_u:
            u = 1.0 - u
        if self.flip_v:
            v = 1.0 - v
        return np.stack([u, v], axis=-1)

    def inverse(self) -> "Dihedral":
        if self.swap:
            return Dihedral(True, self.flip_v, self.flip_u)
        return self

    def compose(self, other: "Dihedral") -> "Dihedral":
        """The map η -> self(other(η))."""
        sample = np.array([[0.1, 0.3]])
        target = self.apply(other.apply(sample))
        return next(d for d in ALL_DIHEDRALS if np.allclose(d.apply(sample), target))

    def map_side(self, side: Side) -> Side:
        """Patch side that the canonical ``side`` is carried to."""
        return side_at(tuple(self.apply(np.array(side.midpoint))))  # type: ignore[arg-type]

    def map_corner(self, corner: Corner) -> Corner:
        u, v = self.apply(np.array(corner.point, dtype=float))
        return Corner.at(round(u), round(v))

    def map_indices(self, a: np.ndarray, b: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Patch tensor indices of canonical tensor indices (a, b) in an n x n basis."""
        i, j = (b, a) if self.swap else (a, b)
        if self.flip_u:
            i = n - 1 - i
        if self.flip_v:
            j = n - 1 - j
        return i, j

    def transform_coefficients(self, canonical: np.ndarray) -> np.ndarray:
        """Coefficient matrix in patch coordinates of a canonical tensor spline."""
        out = canonical.T if self.swap else canonical
        if self.flip_u:
            out = out[::-1, :]
        if self.flip_v:
            out = out[:, ::-1]
        return np.ascontiguousarray(out)

    def derivative_map(self, d1: int, d2: int) -> tuple[int, int, int]:
        """Patch multi-index and sign with ∂_η^{(d1,d2)}(f∘D) = sign · (∂_ξ^{(e1,e2)} f)∘D."""
        if self.swap:
            sign = (-1) ** (d1 * self.flip_v + d2 * self.flip_u)
            return d2, d1, sign
        sign = (-1) ** (d1 * self.flip_u + d2 * self.flip_v)
        return d1, d2, sign


ALL_DIHEDRALS: tuple[Dihedral, ...] = tuple(
    Dihedral(swap, flip_u, flip_v)
    for swap in (False, True)
    for flip_u in (False, True)
    for flip_v in (False, True)
)

IDENTITY = Dihedral()


def edge_frame(side: Side, reverse: bool = False) -> Dihedral:
    """Map placing a patch side at η1 = 0 with η2 running along it.

    Args:
        side: Patch side that becomes the canonical edge
        reverse: Run η2 against the increasing patch coordinate of the side

    Returns:
        The unique symmetry with these properties
    """
    if side.axis == 0:
        return Dihedral(swap=False, flip_u=side.at_one, flip_v=reverse)
    return Dihedral(swap=True, flip_u=reverse, flip_v=side.at_one)


def corner_frame(corner: Corner, first_side: Side) -> Dihedral:
    """Map placing ``corner`` at the origin and ``first_side`` at η1 = 0."""
    if first_side not in corner.sides:
        raise ValueError(f"{first_side.value} does not meet corner {corner.value}")
    u, v = corner.point
    return Dihedral(swap=first_side.axis == 1, flip_u=bool(u), flip_v=bool(v))
