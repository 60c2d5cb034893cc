"""Mixed degree underlying space on the unit square.

Degree p1 = s+1 B-splines fill the patch, degree p2 = 2s+1 B-splines fill a
one-element strip along every side that maps to an inner edge, and truncated
degree p1 B-splines connect the two. Five placements of inner edges exist up to
symmetry; each has a canonical layout (four; three = left+bottom+top; two
adjacent = left+bottom; two opposite = bottom+top; one = bottom), and all
other placements are obtained through a :class:`~mixed_iga.dihedral.Dihedral`.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp
import structlog

from .dihedral import ALL_DIHEDRALS, Corner, Dihedral, Side
from .exceptions import DomainError, ParameterError
from .spline_kernel import UnivariateSpace, embedding_matrix, make_space, truncate

logger = structlog.get_logger(__name__)

SUPPORTED_SMOOTHNESS = (2, 4)


class BasisBlock(str, Enum):
    """Block of the direct sum S1 ⊕ S̄1 ⊕ S2 a basis function belongs to."""

    S1 = "S1"
    S1BAR = "S1bar"
    S2 = "S2"


class Variant(str, Enum):
    """Inner edge configuration of a patch up to symmetry."""

    FOUR = "four"
    THREE = "three"
    TWO_ADJACENT = "two-adjacent"
    TWO_OPPOSITE = "two-opposite"
    ONE = "one"


CANONICAL_INNER: dict[Variant, frozenset[Side]] = {
    Variant.FOUR: frozenset(Side),
    Variant.THREE: frozenset({Side.LEFT, Side.BOTTOM, Side.TOP}),
    Variant.TWO_ADJACENT: frozenset({Side.LEFT, Side.BOTTOM}),
    Variant.TWO_OPPOSITE: frozenset({Side.BOTTOM, Side.TOP}),
    Variant.ONE: frozenset({Side.BOTTOM}),
}


class Degree(str, Enum):
    LOW = "p1"
    HIGH = "p2"


@lru_cache(maxsize=32)
def mixed_spaces(s: int, k: int) -> tuple[UnivariateSpace, UnivariateSpace]:
    """The pair S^{s+1,s} and S^{2s+1,s} with k inner knots."""
    return make_space(s + 1, s, k), make_space(2 * s + 1, s, k)


@dataclass(frozen=True)
class EdgeFlags:
    """Which sides of the parameter square map to inner edges of the domain."""

    inner: frozenset[Side]
    valency1_corners: frozenset[Corner] | None = None

    def __post_init__(self) -> None:
        # a corner off every inner side belongs to this patch only
        free = frozenset(c for c in Corner if not set(c.sides) & self.inner)
        if self.valency1_corners is None:
            object.__setattr__(self, "valency1_corners", free)
        elif self.valency1_corners != free:
            raise ParameterError(
                f"valency-one corners {sorted(c.value for c in self.valency1_corners)} do not "
                f"match the corners off the inner sides {sorted(c.value for c in free)}"
            )

    @classmethod
    def of(cls, *inner: Side | str) -> "EdgeFlags":
        return cls(frozenset(Side(side) for side in inner))

    @property
    def edge_count(self) -> int:
        """E, the number of inner sides."""
        return len(self.inner)

    @property
    def valency1_count(self) -> int:
        """V, the number of corners of patch valency one."""
        return len(self.valency1_corners or ())

    def inner_ends(self, axis: int) -> tuple[bool, bool]:
        """Whether the low and the high end of a coordinate direction are inner sides."""
        if axis == 0:
            return Side.LEFT in self.inner, Side.RIGHT in self.inner
        return Side.BOTTOM in self.inner, Side.TOP in self.inner

    def mapped(self, d: Dihedral) -> "EdgeFlags":
        """Flags of the patch obtained by carrying these canonical flags through ``d``."""
        return EdgeFlags(frozenset(d.map_side(side) for side in self.inner))

    def canonical_frame(self) -> tuple[Variant, Dihedral]:
        """Variant and the first symmetry carrying its canonical layout onto these flags.

        Raises:
            ParameterError: If no side is inner
        """
        if not self.inner:
            raise ParameterError("a patch without inner sides has no mixed degree space")
        for variant, canonical in CANONICAL_INNER.items():
            if len(canonical) != len(self.inner):
                continue
            for d in ALL_DIHEDRALS:
                if frozenset(d.map_side(side) for side in canonical) == self.inner:
                    return variant, d
        raise AssertionError("unreachable: every side subset matches a variant")


@dataclass(frozen=True)
class Factor:
    """One univariate factor of a mixed basis function."""

    degree: Degree
    index: int
    truncate_low: bool = False
    truncate_high: bool = False

    @property
    def truncated(self) -> bool:
        return self.truncate_low or self.truncate_high

    def reflected(self, s: int, k: int) -> "Factor":
        """Factor of x -> 1 - x."""
        low, high = mixed_spaces(s, k)
        n = (low if self.degree is Degree.LOW else high).dimension
        return Factor(self.degree, n - 1 - self.index, self.truncate_high, self.truncate_low)

    def coefficients(self, s: int, k: int) -> np.ndarray:
        """Coefficients of the factor in S^{2s+1,s}."""
        return _factor_coefficients(self, s, k)


@lru_cache(maxsize=8192)
def _factor_coefficients(factor: Factor, s: int, k: int) -> np.ndarray:
    low, high = mixed_spaces(s, k)
    if factor.degree is Degree.HIGH:
        out = np.zeros(high.dimension)
        out[factor.index] = 1.0
        out.setflags(write=False)
        return out
    if factor.truncated:
        return truncate(factor.index, low, high, factor.truncate_low, factor.truncate_high).values
    return embedding_matrix(low, high)[:, factor.index]


@dataclass(frozen=True)
class MixedBasisFunction:
    """Tensor product of two factors, tagged with its block."""

    block: BasisBlock
    factor_u: Factor
    factor_v: Factor

    @property
    def indices(self) -> tuple[int, int]:
        return self.factor_u.index, self.factor_v.index

    def mapped(self, d: Dihedral, s: int, k: int) -> "MixedBasisFunction":
        """The same function written in the coordinates ξ = d(η)."""
        u, v = (self.factor_v, self.factor_u) if d.swap else (self.factor_u, self.factor_v)
        if d.flip_u:
            u = u.reflected(s, k)
        if d.flip_v:
            v = v.reflected(s, k)
        return MixedBasisFunction(self.block, u, v)

    def coefficient_matrix(self, s: int, k: int) -> np.ndarray:
        """Dense (n2, n2) coefficient matrix in the degree-p2 tensor basis."""
        return np.outer(self.factor_u.coefficients(s, k), self.factor_v.coefficients(s, k))


def derivative_indices(max_deriv: int) -> list[tuple[int, int]]:
    """Multi-indices (d1, d2) with d1 + d2 <= max_deriv, by total order."""
    return [(d1, total - d1) for total in range(max_deriv + 1) for d1 in range(total, -1, -1)]


@dataclass(frozen=True, eq=False)
class MixedDegreeSpace2D:
    """Classified basis of the mixed degree space for one edge configuration."""

    s: int
    k: int
    flags: EdgeFlags
    basis: tuple[MixedBasisFunction, ...]

    @property
    def low(self) -> UnivariateSpace:
        return mixed_spaces(self.s, self.k)[0]

    @property
    def high(self) -> UnivariateSpace:
        return mixed_spaces(self.s, self.k)[1]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def block_slice(self, block: BasisBlock) -> slice:
        positions = [i for i, f in enumerate(self.basis) if f.block is block]
        if not positions:
            return slice(0, 0)
        return slice(positions[0], positions[-1] + 1)

    @cached_property
    def factor_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked u- and v-factor coefficients, each of shape (dim, n2)."""
        u = np.array([f.factor_u.coefficients(self.s, self.k) for f in self.basis])
        v = np.array([f.factor_v.coefficients(self.s, self.k) for f in self.basis])
        return u, v

    @cached_property
    def coefficient_matrix(self) -> sp.csc_matrix:
        """Sparse (n2², dim) matrix whose columns are the flattened coefficient matrices."""
        n2 = self.high.dimension
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        u, v = self.factor_matrices
        for col in range(self.dimension):
            iu = np.flatnonzero(u[col])
            iv = np.flatnonzero(v[col])
            rows.append((iu[:, None] * n2 + iv[None, :]).ravel())
            vals.append(np.outer(u[col, iu], v[col, iv]).ravel())
            cols.append(np.full(iu.size * iv.size, col))
        return sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n2 * n2, self.dimension),
        )

    def evaluate(self, points: np.ndarray, d1: int = 0, d2: int = 0) -> np.ndarray:
        """Values of ∂^{(d1,d2)} of every basis function, shape (m, dim)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise DomainError("evaluation point outside [0,1]²")
        u, v = self.factor_matrices
        bu = self.high.basis_matrix(pts[:, 0], d1) @ u.T
        bv = self.high.basis_matrix(pts[:, 1], d2) @ v.T
        return bu * bv

    def eval(self, point: tuple[float, float], max_deriv: int) -> np.ndarray:
        """Derivatives of all basis functions at one point.

        Args:
            point: Parameter point in [0,1]²
            max_deriv: Highest total derivative order

        Returns:
            Array of shape (dim, len(derivative_indices(max_deriv)))
        """
        if max_deriv > 4:
            raise ParameterError(f"derivatives up to order 4 are supported, got {max_deriv}")
        pts = np.array([point], dtype=float)
        return np.column_stack(
            [self.evaluate(pts, d1, d2)[0] for d1, d2 in derivative_indices(max_deriv)]
        )


def dimension(s: int, k: int, edge_count: int, valency1_count: int) -> int:
    """Closed-form dimension of the mixed degree space.

    (k+2)² + ((2+2E)k + (12-E-2V))s + (Ek + 5 - V)s²
    """
    if not 1 <= edge_count <= 4 or not 0 <= valency1_count <= 2:
        raise ParameterError(f"unsupported configuration E={edge_count}, V={valency1_count}")
    e, v = edge_count, valency1_count
    return (k + 2) ** 2 + ((2 + 2 * e) * k + (12 - e - 2 * v)) * s + (e * k + 5 - v) * s * s


def _index_ranges(
    s: int, k: int, low_inner: bool, high_inner: bool
) -> tuple[range, range]:
    """Plain S1 indices and the extended S1 ∪ S̄1 indices in one direction."""
    n1 = k + s + 2
    plain = range(s + 1 if low_inner else 0, n1 - s - 1 if high_inner else n1)
    extended = range(1 if low_inner else 0, n1 - 1 if high_inner else n1)
    return plain, extended


def low_factor(j: int, s: int, k: int, low_inner: bool, high_inner: bool) -> Factor:
    n1 = k + s + 2
    return Factor(
        Degree.LOW,
        j,
        truncate_low=low_inner and 1 <= j <= s,
        truncate_high=high_inner and n1 - s - 1 <= j <= n1 - 2,
    )


def canonical_basis(variant: Variant, s: int, k: int) -> list[MixedBasisFunction]:
    """Basis of the canonical layout of ``variant``, blocks in S1, S̄1, S2 order."""
    inner = CANONICAL_INNER[variant]
    flags = EdgeFlags(inner)
    ends_u = flags.inner_ends(0)
    ends_v = flags.inner_ends(1)
    plain_u, ext_u = _index_ranges(s, k, *ends_u)
    plain_v, ext_v = _index_ranges(s, k, *ends_v)

    s1 = [
        MixedBasisFunction(BasisBlock.S1, Factor(Degree.LOW, j1), Factor(Degree.LOW, j2))
        for j1, j2 in product(plain_u, plain_v)
    ]
    s1bar = [
        MixedBasisFunction(
            BasisBlock.S1BAR,
            low_factor(j1, s, k, *ends_u),
            low_factor(j2, s, k, *ends_v),
        )
        for j1, j2 in product(ext_u, ext_v)
        if j1 not in plain_u or j2 not in plain_v
    ]

    n2 = 2 * s + 2 + k * (s + 1)

    def in_strip(j1: int, j2: int) -> bool:
        return (
            (Side.LEFT in inner and j1 <= s)
            or (Side.RIGHT in inner and j1 >= n2 - s - 1)
            or (Side.BOTTOM in inner and j2 <= s)
            or (Side.TOP in inner and j2 >= n2 - s - 1)
        )

    s2 = [
        MixedBasisFunction(BasisBlock.S2, Factor(Degree.HIGH, j1), Factor(Degree.HIGH, j2))
        for j1, j2 in product(range(n2), range(n2))
        if in_strip(j1, j2)
    ]
    return s1 + s1bar + s2


def _ordered(functions: list[MixedBasisFunction]) -> tuple[MixedBasisFunction, ...]:
    order = {BasisBlock.S1: 0, BasisBlock.S1BAR: 1, BasisBlock.S2: 2}
    return tuple(sorted(functions, key=lambda f: (order[f.block], f.indices)))


def build_with_frame(s: int, k: int, flags: EdgeFlags, frame: Dihedral) -> MixedDegreeSpace2D:
    """Build the space by carrying the canonical layout through a chosen symmetry.

    ``frame`` must map the canonical inner sides of the variant onto ``flags.inner``.
    """
    variant, _ = flags.canonical_frame()
    if frozenset(frame.map_side(side) for side in CANONICAL_INNER[variant]) != flags.inner:
        raise ParameterError("frame does not carry the canonical layout onto the flags")
    mapped = [f.mapped(frame, s, k) for f in canonical_basis(variant, s, k)]
    return MixedDegreeSpace2D(s=s, k=k, flags=flags, basis=_ordered(mapped))


def build(s: int, k: int, flags: EdgeFlags) -> MixedDegreeSpace2D:
    """Build the mixed degree space of a patch.

    Args:
        s: Smoothness, 2 or 4
        k: Number of inner knots, at least s+1
        flags: Inner sides and valency-one corners of the patch

    Returns:
        The space with its basis ordered S1, S̄1, S2, each lexicographic in (j1, j2)

    Raises:
        ParameterError: For unsupported s, too few knots or no inner side
    """
    if s not in SUPPORTED_SMOOTHNESS:
        raise ParameterError(f"smoothness must be one of {SUPPORTED_SMOOTHNESS}, got {s}")
    if k < s + 1:
        raise ParameterError(f"mixed degree space needs k >= s+1 = {s + 1}, got {k}")
    variant, frame = flags.canonical_frame()
    space = build_with_frame(s, k, flags, frame)
    logger.debug(
        "mixed_space_built",
        s=s,
        k=k,
        variant=variant.value,
        inner=sorted(side.value for side in flags.inner),
        dimension=space.dimension,
    )
    return space
