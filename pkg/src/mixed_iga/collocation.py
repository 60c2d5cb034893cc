"""Collocation points on multi-patch domains.

Every patch contributes one point per basis function of its mixed degree
space. A :class:`UnivariateLayout` assigns a parameter to every index of
S^{s+1,s} and of S^{2s+1,s} in one direction; a basis function N_{j1} ⊗ N_{j2}
is collocated at the tensor product of the parameters of its two factors.
Points shared by several patches are kept once, owned by the lowest patch index.
"""

import math
from collections import defaultdict
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import structlog
from scipy.spatial import cKDTree

from .config import Problem, Scheme, Settings
from .dihedral import Side
from .exceptions import CollocationError
from .geometry import MultiPatchDomain
from .mixed_space import BasisBlock, Degree, Factor, MixedDegreeSpace2D, build, mixed_spaces

logger = structlog.get_logger(__name__)

_SQRT3 = math.sqrt(3.0)
_MAX5 = math.sqrt(225.0 - 30.0 * math.sqrt(30.0)) / 15.0

# superconvergent points per knot span on the reference interval [-1, 1]
LOW_DEGREE_ROOTS: tuple[float, ...] = (-1.0 / _SQRT3, 1.0 / _SQRT3)
HIGH_DEGREE_ROOTS: dict[int, tuple[float, ...]] = {
    2: (
        -math.sqrt((6.0 + math.sqrt(21.0)) / 15.0),
        -math.sqrt((6.0 - math.sqrt(21.0)) / 15.0),
        math.sqrt((6.0 - math.sqrt(21.0)) / 15.0),
        math.sqrt((6.0 + math.sqrt(21.0)) / 15.0),
    ),
    # roots of 4823 x^6 - 5915 x^4 + 1665 x^2 - 61
    4: (
        -0.9098737952346008,
        -0.5963052503103114,
        -0.2072795685478027,
        0.2072795685478027,
        0.5963052503103114,
        0.9098737952346008,
    ),
}
# roots for S^{2s+1-l, 2s-l} with maximal regularity, indexed by s and then l
MAX_REGULARITY_ROOTS: dict[int, tuple[tuple[float, ...], ...]] = {
    2: ((-_MAX5, _MAX5), (-1.0, 0.0, 1.0), LOW_DEGREE_ROOTS),
    4: (
        (-0.504918567512653, 0.504918567512653),
        (-1.0, 0.0, 1.0),
        (-_MAX5, _MAX5),
        (-1.0, 0.0, 1.0),
        LOW_DEGREE_ROOTS,
    ),
}


class PointTag(str, Enum):
    """Equation attached to a collocation point."""

    INTERIOR = "interior"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


_TAG_ORDER = {PointTag.INTERIOR: 0, PointTag.DIRICHLET: 1, PointTag.NEUMANN: 2}


@dataclass(frozen=True)
class CollocationPoint:
    """One equation: a point, its owning patch and the condition imposed there.

    Every collocation point carries exactly one equation. A Neumann row is
    evaluated at the projection of its point onto the boundary side, so
    ``point`` and ``zeta`` hold the projection. ``side`` and ``edge`` name the
    boundary side for boundary tags.
    """

    index: int
    point: tuple[float, float]
    patch: int
    zeta: tuple[float, float]
    tag: PointTag
    side: Side | None = None
    edge: int | None = None


@dataclass(frozen=True)
class PointScheme:
    """Which point set to generate, for smoothness s and k inner knots."""

    kind: Scheme
    s: int
    k: int

    def validate(self, domain: MultiPatchDomain) -> None:
        """Check that the scheme is defined on ``domain``.

        Raises:
            CollocationError: For Set 2 or Set 3 on anything but a two-patch domain
        """
        if self.s not in HIGH_DEGREE_ROOTS:
            raise CollocationError(f"collocation points need s in (2, 4), got {self.s}")
        if self.k < 2:
            raise CollocationError(f"clustered points need at least 2 inner knots, got {self.k}")
        if self.kind.needs_two_patches and (
            len(domain.patches) != 2 or len(domain.inner_edges) != 1
        ):
            raise CollocationError(
                f"{self.kind.value} needs two patches sharing one inner edge; domain "
                f"{domain.name} has {len(domain.patches)} patches and "
                f"{len(domain.inner_edges)} inner edges"
            )


# ---------------------------------------------------------------------------
# Univariate layouts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class UnivariateLayout:
    """Parameters of the indices of S^{s+1,s} (``low``) and S^{2s+1,s} (``high``)."""

    low: np.ndarray
    high: np.ndarray

    def abscissa(self, factor: Factor) -> float:
        table = self.low if factor.degree is Degree.LOW else self.high
        return float(table[factor.index])


def _on_span(roots: Sequence[float], span: int, h: float) -> np.ndarray:
    return (span + (np.asarray(roots, dtype=float) + 1.0) / 2.0) * h


def _symmetric_fill(
    roots: Sequence[float], first_span: int, spans: int, h: float
) -> np.ndarray:
    """spans(R-1)+1 points on ``spans`` consecutive spans from ``first_span`` on.

    Spans left of the middle lose their last root and the mirror images lose
    their first. A central span keeps all roots; without one the midpoint of
    the run is added.
    """
    left: list[float] = []
    for t in range(spans // 2):
        left.extend(_on_span(roots, first_span + t, h)[:-1])
    lo, hi = first_span * h, (first_span + spans) * h
    mid = (lo + hi) / 2.0
    center = list(_on_span(roots, first_span + spans // 2, h)) if spans % 2 else [mid]
    half = np.array(left)
    return np.concatenate([half, center, lo + hi - half[::-1]])


def clustered_interior(roots: Sequence[float], k: int) -> np.ndarray:
    """(k-1)(R-1)+1 points on [h, 1-h] from the R roots of each inner span."""
    if k < 2:
        raise CollocationError("clustered points need at least two inner knots")
    h = 1.0 / (k + 1)
    return _symmetric_fill(roots, 1, k - 1, h)


def high_superconvergent(s: int, k: int) -> np.ndarray:
    """Clustered points of S^{2s+1,s}, one per basis index.

    Each end span carries the end point and its s + s/2 roots nearest the knot.
    """
    h = 1.0 / (k + 1)
    roots = HIGH_DEGREE_ROOTS[s]
    end = np.concatenate([[0.0], _on_span(roots[len(roots) - (s + s // 2) :], 0, h)])
    return np.concatenate([end, clustered_interior(roots, k), 1.0 - end[::-1]])


def _low_end(s: int, k: int, inner: bool, high: np.ndarray) -> np.ndarray:
    half = s // 2
    if inner:
        # index 0 has no basis function at an inner end
        return high[[0, *range(s + 1, s + 1 + half)]]
    h = 1.0 / (k + 1)
    return np.concatenate([[0.0], _on_span(LOW_DEGREE_ROOTS[:half], 0, h)])


@lru_cache(maxsize=64)
def superconvergent_layout(s: int, k: int, low_inner: bool, high_inner: bool) -> UnivariateLayout:
    """Mixed degree superconvergent layout of one direction.

    Truncated indices 1..s/2 at an inner end take the clustered S^{2s+1,s}
    points s+1..s+s/2; the k points on [h, 1-h] follow the degree s+1 roots.
    """
    high = high_superconvergent(s, k)
    low = np.concatenate(
        [
            _low_end(s, k, low_inner, high),
            clustered_interior(LOW_DEGREE_ROOTS, k),
            1.0 - _low_end(s, k, high_inner, high)[::-1],
        ]
    )
    if low.size != mixed_spaces(s, k)[0].dimension:
        raise CollocationError(f"clustered layout has {low.size} points for s={s}, k={k}")
    return UnivariateLayout(low=low, high=high)


@lru_cache(maxsize=64)
def greville_layout(s: int, k: int, low_inner: bool, high_inner: bool) -> UnivariateLayout:
    """Mixed degree Greville layout of one direction.

    The truncated indices i = 1..s/2 at an inner end move to ζ^{2s+1,s}_{s+i};
    the remaining indices keep their Greville abscissae.
    """
    low_space, high_space = mixed_spaces(s, k)
    high = high_space.greville_points.copy()
    low = low_space.greville_points.copy()
    n1, n2, half = low_space.dimension, high_space.dimension, s // 2
    if low_inner:
        low[1 : half + 1] = high[s + 1 : s + 1 + half]
    if high_inner:
        low[n1 - 1 - half : n1 - 1] = high[n2 - 1 - s - half : n2 - 1 - s]
    return UnivariateLayout(low=low, high=high)


def max_regularity_sequence(s: int, ell: int, k: int) -> np.ndarray:
    """Clustered points of S^{2s+1-ℓ, 2s-ℓ}, one per basis function.

    With two roots per span the (q-3)/2 outer spans at each end keep both and
    the run between them is filled like the interior of the mixed layouts. With
    the roots -1, 0, 1 every span midpoint is taken plus the (q-2)/2 knots
    nearest each end.

    Raises:
        CollocationError: If k is too small for the degree
    """
    q = 2 * s + 1 - ell
    h = 1.0 / (k + 1)
    roots = MAX_REGULARITY_ROOTS[s][ell]
    if len(roots) == 2:
        full = (q - 3) // 2
        if 2 * full > k + 1:
            raise CollocationError(f"S^({q},{q - 1}) points need k >= {2 * full - 1}, got {k}")
        ends = np.concatenate([_on_span(roots, span, h) for span in range(full)] or [np.empty(0)])
        middle = _symmetric_fill(roots, full, k + 1 - 2 * full, h)
        interior = np.concatenate([ends, middle, 1.0 - ends[::-1]])
    else:
        knots = (q - 2) // 2
        if knots > k // 2:
            raise CollocationError(f"S^({q},{q - 1}) points need k >= {2 * knots}, got {k}")
        near = np.arange(1, knots + 1) * h
        interior = np.sort(
            np.concatenate([(np.arange(k + 1) + 0.5) * h, near, 1.0 - near[::-1]])
        )
    out = np.concatenate([[0.0], interior, [1.0]])
    if out.size != q + 1 + k:
        raise CollocationError(f"S^({q},{q - 1}) sequence has {out.size} points for k={k}")
    return out


# ---------------------------------------------------------------------------
# Points of one patch
# ---------------------------------------------------------------------------


def _tensor_points(space2d: MixedDegreeSpace2D, kind: Scheme) -> np.ndarray:
    layout = greville_layout if kind is Scheme.GREVILLE else superconvergent_layout
    lu = layout(space2d.s, space2d.k, *space2d.flags.inner_ends(0))
    lv = layout(space2d.s, space2d.k, *space2d.flags.inner_ends(1))
    return np.array(
        [(lu.abscissa(f.factor_u), lv.abscissa(f.factor_v)) for f in space2d.basis]
    ).reshape(-1, 2)


def mixed_greville(space2d: MixedDegreeSpace2D) -> np.ndarray:
    """Mixed degree Greville points, row i belonging to basis function i."""
    return _tensor_points(space2d, Scheme.GREVILLE)


def mixed_superconvergent(space2d: MixedDegreeSpace2D) -> np.ndarray:
    """Mixed degree superconvergent points, row i belonging to basis function i."""
    return _tensor_points(space2d, Scheme.SUPERCONVERGENT)


def _edge_columns(
    domain: MultiPatchDomain, patch: int, s: int, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """The inner edge column and its s neighbours along the edge, with column numbers."""
    edge = domain.inner_edges[0]
    side = edge.sides[edge.patches.index(patch)]
    normal = high_superconvergent(s, k)
    points: list[np.ndarray] = []
    columns: list[np.ndarray] = []
    for ell in range(s + 1):
        along = max_regularity_sequence(s, ell, k)
        zeta = np.empty((along.size, 2))
        zeta[:, side.axis] = normal[-1 - ell] if side.at_one else normal[ell]
        zeta[:, 1 - side.axis] = along
        points.append(zeta)
        columns.append(np.full(along.size, ell))
    return np.vstack(points), np.concatenate(columns)


def local_points(
    domain: MultiPatchDomain, scheme: PointScheme, patch: int
) -> tuple[np.ndarray, np.ndarray]:
    """Parameter points of one patch and, per point, its replaced edge column or -1."""
    space2d = build(scheme.s, scheme.k, domain.patch_flags(patch))
    kind = Scheme.SUPERCONVERGENT if scheme.kind.needs_two_patches else scheme.kind
    zeta = _tensor_points(space2d, kind)
    columns = np.full(zeta.shape[0], -1)
    if scheme.kind.needs_two_patches:
        keep = np.array([f.block is not BasisBlock.S2 for f in space2d.basis], dtype=bool)
        edge_zeta, edge_columns = _edge_columns(domain, patch, scheme.s, scheme.k)
        zeta = np.vstack([zeta[keep], edge_zeta])
        columns = np.concatenate([columns[keep], edge_columns])
    return zeta, columns


# ---------------------------------------------------------------------------
# Tags
# ---------------------------------------------------------------------------


def _on_side(zeta: np.ndarray, side: Side) -> np.ndarray:
    return np.asarray(zeta[:, side.axis] == (1.0 if side.at_one else 0.0))


def _project(zeta: np.ndarray, side: Side) -> tuple[float, float]:
    out = [float(zeta[0]), float(zeta[1])]
    out[side.axis] = 1.0 if side.at_one else 0.0
    return out[0], out[1]


def first_layer(zeta: np.ndarray, boundary: list[Side]) -> dict[int, Side]:
    """Points next to a boundary side, with the side of smallest index they touch.

    A point neighbours a side when, on its line perpendicular to the side, it is
    the second closest point and the closest one lies on the side.
    """
    out: dict[int, Side] = {}
    for side in sorted(boundary, key=list(Side).index):
        along = zeta[:, 1 - side.axis]
        distance = 1.0 - zeta[:, side.axis] if side.at_one else zeta[:, side.axis]
        lines: dict[float, list[int]] = defaultdict(list)
        for i in np.lexsort((distance, along)):
            lines[float(along[i])].append(int(i))
        for members in lines.values():
            if len(members) > 1 and distance[members[0]] == 0.0:
                out.setdefault(members[1], side)
    return out


def tag_points(
    zeta: np.ndarray, boundary: list[Side], problem: Problem
) -> list[tuple[PointTag, Side | None, tuple[float, float]]]:
    """One equation per point of a patch: its tag, side and evaluation parameter.

    Points on a boundary side get a Dirichlet condition, everything else the
    PDE. For the biharmonic problem a point next to a boundary side trades its
    PDE for a Neumann condition at its orthogonal projection onto that side.
    """
    ordered = sorted(boundary, key=list(Side).index)
    on = {side: _on_side(zeta, side) for side in ordered}
    layer = first_layer(zeta, ordered) if problem is Problem.BIHARMONIC else {}
    tags: list[tuple[PointTag, Side | None, tuple[float, float]]] = []
    for i in range(zeta.shape[0]):
        own = (float(zeta[i, 0]), float(zeta[i, 1]))
        sides = [side for side in ordered if on[side][i]]
        if sides:
            tags.append((PointTag.DIRICHLET, sides[0], own))
        elif i in layer:
            tags.append((PointTag.NEUMANN, layer[i], _project(zeta[i], layer[i])))
        else:
            tags.append((PointTag.INTERIOR, None, own))
    return tags


# ---------------------------------------------------------------------------
# Global assembly
# ---------------------------------------------------------------------------


def _duplicates(
    points: np.ndarray, radius: float, keep_both: Callable[[int, int], bool] | None = None
) -> set[int]:
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    return {
        int(j)
        for i, j in np.sort(pairs, axis=1).reshape(-1, 2)
        if keep_both is None or not keep_both(int(i), int(j))
    }


def _alternate(patches: np.ndarray, columns: np.ndarray, along: np.ndarray, first: int) -> set[int]:
    """Every second point of every replaced column.

    Column ℓ of the patch listed first on the inner edge drops the positions of
    parity ℓ, the other patch the opposite parity, so the two copies of the
    edge column complement each other.
    """
    groups: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i in np.flatnonzero(columns >= 0):
        groups[(int(patches[i]), int(columns[i]))].append(int(i))
    dropped: set[int] = set()
    for (patch, column), members in groups.items():
        parity = (column + (patch != first)) % 2
        ordered = sorted(members, key=lambda i: along[i])
        dropped.update(i for n, i in enumerate(ordered) if n % 2 == parity)
    return dropped


def _adjustment_order(indices: Sequence[int], columns: np.ndarray, along: np.ndarray) -> list[int]:
    # outer columns first, then from the middle of the edge outwards in mirror pairs
    return sorted(
        indices, key=lambda i: (-columns[i], round(abs(along[i] - 0.5), 12), along[i], i)
    )


def thin_to_dimension(
    kept: list[int],
    dropped: set[int],
    columns: np.ndarray,
    along: np.ndarray,
    tags: list[tuple[PointTag, Side | None, tuple[float, float]]],
    dimension: int,
    clashes: Callable[[int, list[int]], bool],
) -> list[int]:
    """Move points between ``kept`` and ``dropped`` until ``dimension`` remain.

    Surplus interior points of the neighbour columns go first; a shortfall is
    refilled from the dropped column points that do not clash with a kept one.

    Raises:
        CollocationError: If the columns cannot absorb the difference
    """
    kept = sorted(kept)
    excess = len(kept) - dimension
    if excess > 0:
        candidates = [i for i in kept if columns[i] > 0 and tags[i][0] is PointTag.INTERIOR]
        if len(candidates) < excess:
            raise CollocationError(
                f"set3 cannot drop {excess} equations, only {len(candidates)} candidates"
            )
        removed = set(_adjustment_order(candidates, columns, along)[:excess])
        kept = [i for i in kept if i not in removed]
    elif excess < 0:
        for i in _adjustment_order(sorted(dropped), columns, along):
            if len(kept) == dimension:
                break
            if not clashes(i, kept):
                kept.append(i)
        if len(kept) < dimension:
            raise CollocationError(f"set3 yields {len(kept)} equations for dimension {dimension}")
        kept.sort()
    return kept


def assemble_global(
    domain: MultiPatchDomain,
    scheme: PointScheme,
    problem: Problem,
    settings: Settings | None = None,
    dimension: int | None = None,
) -> list[CollocationPoint]:
    """Generate, merge and tag the collocation points of a domain.

    Set 2 collocates the inner edge column from both patches. Set 3 keeps every
    second point of each replaced column and, given ``dimension``, moves
    column points in or out until the system is square.

    Args:
        domain: Oriented multi-patch domain
        scheme: Point scheme with s and k
        problem: Decides the boundary treatment
        settings: Merge tolerance; defaults from the environment
        dimension: Target equation count of Set 3; no adjustment without it

    Returns:
        Equations ordered by tag (interior, Dirichlet, Neumann), then point index

    Raises:
        CollocationError: If the scheme does not fit the domain
    """
    settings = settings or Settings()
    scheme.validate(domain)

    patch_ids: list[int] = []
    zetas: list[np.ndarray] = []
    columns_of: list[np.ndarray] = []
    tags: list[tuple[PointTag, Side | None, tuple[float, float]]] = []
    for p in domain.patches:
        zeta, column = local_points(domain, scheme, p.index)
        patch_ids += [p.index] * zeta.shape[0]
        zetas.append(zeta)
        columns_of.append(column)
        tags += tag_points(zeta, domain.boundary_sides(p.index), problem)
    patches = np.array(patch_ids)
    zeta_all = np.vstack(zetas)
    columns = np.concatenate(columns_of)
    physical = np.vstack([p(z) for p, z in zip(domain.patches, zetas, strict=True)])
    radius = settings.dedup_tolerance * domain.diameter

    along = np.zeros(zeta_all.shape[0])
    first = -1
    if scheme.kind.needs_two_patches:
        edge = domain.inner_edges[0]
        first = edge.patches[0]
        for tau, patch in enumerate(edge.patches):
            mine = patches == patch
            along[mine] = zeta_all[mine, 1 - edge.sides[tau].axis]

    candidates = np.arange(zeta_all.shape[0])
    dropped: set[int] = set()
    if scheme.kind is Scheme.SET3:
        dropped = _alternate(patches, columns, along, first)
        candidates = np.array([i for i in candidates if i not in dropped])

    def edge_copies(a: int, b: int) -> bool:
        i, j = candidates[a], candidates[b]
        return bool(columns[i] == 0 and columns[j] == 0 and patches[i] != patches[j])

    keep_both = edge_copies if scheme.kind is Scheme.SET2 else None
    duplicates = _duplicates(physical[candidates], radius, keep_both)
    kept = [int(i) for n, i in enumerate(candidates) if n not in duplicates]
    merged = len(duplicates)

    if scheme.kind is Scheme.SET3 and dimension is not None:

        def clashes(i: int, chosen: list[int]) -> bool:
            gaps = np.linalg.norm(physical[chosen] - physical[i], axis=1)
            return bool((gaps <= radius).any())

        kept = thin_to_dimension(kept, dropped, columns, along, tags, dimension, clashes)

    evaluation = np.array([tags[i][2] for i in range(zeta_all.shape[0])])
    at = np.vstack(
        [
            p(evaluation[patches == p.index]) if (patches == p.index).any() else np.empty((0, 2))
            for p in domain.patches
        ]
    )
    rows = sorted(range(len(kept)), key=lambda n: (_TAG_ORDER[tags[kept[n]][0]], n))
    out: list[CollocationPoint] = []
    for n in rows:
        i = kept[n]
        tag, side, zeta = tags[i]
        out.append(
            CollocationPoint(
                index=n,
                point=(float(at[i, 0]), float(at[i, 1])),
                patch=int(patches[i]),
                zeta=zeta,
                tag=tag,
                side=side,
                edge=domain.edge_at(int(patches[i]), side)[1] if side is not None else None,
            )
        )
    counts = {tag.value: sum(1 for c in out if c.tag is tag) for tag in PointTag}
    logger.info(
        "collocation_points_assembled",
        domain=domain.name,
        scheme=scheme.kind.value,
        problem=problem.value,
        s=scheme.s,
        k=scheme.k,
        points=zeta_all.shape[0],
        merged=merged,
        thinned=zeta_all.shape[0] - merged - len(kept),
        equations=len(out),
        **counts,
    )
    return out


def set2_set3(
    domain: MultiPatchDomain,
    s: int,
    k: int,
    which: int,
    problem: Problem,
    settings: Settings | None = None,
    dimension: int | None = None,
) -> list[CollocationPoint]:
    """Two-patch point sets with maximal regularity columns along the inner edge.

    Set 2 replaces the edge column and its s neighbours on both sides; Set 3
    thins these columns alternately down to a square system.
    """
    if which not in (2, 3):
        raise CollocationError(f"which must be 2 or 3, got {which}")
    kind = Scheme.SET2 if which == 2 else Scheme.SET3
    return assemble_global(domain, PointScheme(kind, s, k), problem, settings, dimension)
