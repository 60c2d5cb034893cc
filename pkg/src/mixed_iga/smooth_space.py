"""The C^s-smooth mixed degree space on a multi-patch domain.

The space is the direct sum of patch, edge and vertex subspaces. Every global
basis function is stored per patch as a sparse coefficient vector in the
S^{2s+1,s} ⊗ S^{2s+1,s} tensor basis of that patch, flattened in C order.
"""

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from itertools import product
from math import comb, prod

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import structlog

from .config import Settings
from .dihedral import Dihedral, corner_frame, edge_frame
from .exceptions import KernelRankError, ParameterError, SpaceConstructionError
from .geometry import EdgeKind, GluingData, InnerEdge, MultiPatchDomain, Vertex
from .mixed_space import (
    CANONICAL_INNER,
    BasisBlock,
    Degree,
    EdgeFlags,
    Factor,
    MixedBasisFunction,
    Variant,
    build,
    low_factor,
    mixed_spaces,
)
from .models import GluingCheck
from .operators import DifferentialOperator, GeometryJets, physical_derivative
from .spline_kernel import (
    COEFFICIENT_CUTOFF,
    UnivariateSpace,
    interpolate,
    make_space,
    prune,
    tensor_rows,
)

logger = structlog.get_logger(__name__)

# singular values within this factor of the threshold make the kernel rank ambiguous
KERNEL_GAP = 10.0


class OriginKind(str, Enum):
    PATCH = "patch"
    INNER_EDGE = "inner-edge"
    BOUNDARY_EDGE = "boundary-edge"
    VERTEX = "vertex"


@dataclass(frozen=True)
class Origin:
    kind: OriginKind
    index: int

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.index}"


@dataclass(frozen=True, eq=False)
class PatchPiece:
    """Restriction of a basis function to one patch."""

    patch: int
    flat: np.ndarray
    values: np.ndarray

    @classmethod
    def from_entries(
        cls, patch: int, rows: np.ndarray, cols: np.ndarray, values: np.ndarray, n2: int
    ) -> "PatchPiece":
        """Sum duplicate (row, col) entries and drop rounding noise."""
        flat, inverse = np.unique(np.asarray(rows) * n2 + np.asarray(cols), return_inverse=True)
        summed = np.zeros(flat.size)
        np.add.at(summed, inverse, values)
        scale = np.abs(summed).max(initial=0.0)
        keep = np.abs(summed) > COEFFICIENT_CUTOFF * scale
        return cls(patch, flat[keep], summed[keep])

    @classmethod
    def from_mixed(cls, patch: int, function: MixedBasisFunction, s: int, k: int) -> "PatchPiece":
        fu = function.factor_u.coefficients(s, k)
        fv = function.factor_v.coefficients(s, k)
        iu = np.flatnonzero(fu)
        iv = np.flatnonzero(fv)
        rows, cols = np.meshgrid(iu, iv, indexing="ij")
        values = np.outer(fu[iu], fv[iv])
        return cls.from_entries(patch, rows.ravel(), cols.ravel(), values.ravel(), fu.size)

    def gather(self, flat: np.ndarray) -> np.ndarray:
        """Coefficients at the given flat indices, zero where the piece has none."""
        pos = np.searchsorted(self.flat, flat)
        pos = np.clip(pos, 0, max(self.flat.size - 1, 0))
        out = np.zeros(np.shape(flat))
        if self.flat.size:
            hit = self.flat[pos] == flat
            out[hit] = self.values[pos[hit]]
        return out

    def dense(self, n2: int) -> np.ndarray:
        out = np.zeros(n2 * n2)
        out[self.flat] = self.values
        return out.reshape(n2, n2)


@dataclass(frozen=True, eq=False)
class SmoothBasisFunction:
    """One global basis function φ of W^s."""

    id: int
    origin: Origin
    pieces: tuple[PatchPiece, ...]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(piece.patch for piece in self.pieces)


def _canonical_piece(
    patch: int,
    frame: Dihedral,
    a: np.ndarray,
    b: np.ndarray,
    values: np.ndarray,
    n2: int,
) -> PatchPiece:
    i, j = frame.map_indices(np.asarray(a), np.asarray(b), n2)
    return PatchPiece.from_entries(patch, i, j, values, n2)


def _function(origin: Origin, pieces: Iterable[PatchPiece]) -> SmoothBasisFunction:
    return SmoothBasisFunction(-1, origin, tuple(p for p in pieces if p.flat.size))


# ---------------------------------------------------------------------------
# Inner edge functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EdgeBasis:
    """Ingredients of the functions f^{(τ)}_{j1,j2} attached to one inner edge.

    f^{(τ)}_{j1,j2}(η) = γ_{j1} Σ_{ℓ=j1}^{s} C(ℓ,j1) M_ℓ(η1) g_ℓ(η2) with
    g_ℓ = (β^{(τ)})^{ℓ-j1} (α^{(τ)})^{j1} ∂^{ℓ-j1} N^{p2-j1,2s-j1}_{j2}, all in the
    canonical frames of the edge.
    """

    s: int
    k: int
    edge: InnerEdge
    data: GluingData

    @property
    def high(self) -> UnivariateSpace:
        return mixed_spaces(self.s, self.k)[1]

    @property
    def p2(self) -> int:
        return 2 * self.s + 1

    @property
    def h(self) -> float:
        return 1.0 / (self.k + 1)

    def trace_space(self, j1: int) -> UnivariateSpace:
        return make_space(self.p2 - j1, 2 * self.s - j1, self.k)

    def trace_dimension(self, j1: int) -> int:
        return self.trace_space(j1).dimension

    def gamma(self, j1: int) -> float:
        return self.h ** (-j1) * prod(self.p2 - rho for rho in range(j1))

    @cached_property
    def transversal(self) -> np.ndarray:
        """Rows M_ℓ, ℓ = 0..s, coefficients m_ℓ[j] = C(j,ℓ) h^ℓ / Π_{ρ<ℓ}(p2-ρ) for j = ℓ..s."""
        out = np.zeros((self.s + 1, self.high.dimension))
        for ell in range(self.s + 1):
            denominator = prod(self.p2 - rho for rho in range(ell))
            for j in range(ell, self.s + 1):
                out[ell, j] = comb(j, ell) * self.h**ell / denominator
        return out

    @cached_property
    def _along(self) -> dict[tuple[int, int, int], np.ndarray]:
        return {}

    def along(self, tau: int, j1: int, ell: int) -> np.ndarray:
        """Coefficients of g_ℓ for all j2 at once, shape (n2, trace dimension)."""
        key = (tau, j1, ell)
        if key not in self._along:
            zeta = self.high.greville_points
            weight = self.data.beta[tau](zeta) ** (ell - j1) * self.data.alpha[tau](zeta) ** j1
            values = weight[:, None] * self.trace_space(j1).basis_matrix(zeta, ell - j1)
            self._along[key] = prune(interpolate(self.high, values))
        return self._along[key]

    def window(self, j1: int) -> range:
        """Indices j2 whose functions vanish to order s at both edge ends."""
        return range(2 * self.s + 1 - j1, self.k + 1)

    def near_vertex(self, j1: int, at_end: bool) -> list[int]:
        near = list(range(2 * self.s + 1 - j1))
        if not at_end:
            return near
        last = self.trace_dimension(j1) - 1
        return [last - j for j in near]

    def canonical(self, tau: int, j1: int, j2: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sparse (a, b, value) entries of f^{(τ)}_{j1,j2} in the canonical frame."""
        if not 0 <= j1 <= self.s or not 0 <= j2 < self.trace_dimension(j1):
            raise ParameterError(f"edge function index ({j1}, {j2}) out of range")
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        gamma = self.gamma(j1)
        for ell in range(j1, self.s + 1):
            m = self.transversal[ell]
            g = self.along(tau, j1, ell)[:, j2]
            ia = np.flatnonzero(m)
            ib = np.flatnonzero(g)
            a, b = np.meshgrid(ia, ib, indexing="ij")
            rows.append(a.ravel())
            cols.append(b.ravel())
            vals.append((gamma * comb(ell, j1) * np.outer(m[ia], g[ib])).ravel())
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    def pieces(self, j1: int, j2: int) -> tuple[PatchPiece, PatchPiece]:
        n2 = self.high.dimension
        out = []
        for tau in (0, 1):
            a, b, v = self.canonical(tau, j1, j2)
            out.append(_canonical_piece(self.edge.patches[tau], self.edge.frames[tau], a, b, v, n2))
        return out[0], out[1]


def edge_trace_functions(
    domain: MultiPatchDomain, edge: int, s: int, k: int, j1: int, j2: int
) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient matrices (n2, n2) of f^{(i0)}_{j1,j2} and f^{(i1)}_{j1,j2} in patch coordinates.

    Raises:
        ParameterError: If (j1, j2) is out of range
    """
    basis = EdgeBasis(s, k, domain.inner_edges[edge], domain.gluing_data[edge])
    n2 = basis.high.dimension
    first, second = basis.pieces(j1, j2)
    return first.dense(n2), second.dense(n2)


# ---------------------------------------------------------------------------
# Patch and boundary edge subspaces
# ---------------------------------------------------------------------------


def patch_index_pairs(variant: Variant, s: int, k: int) -> list[tuple[int, int]]:
    """Index pairs (j1, j2) of the patch subspace in the canonical layout of ``variant``."""
    n1 = k + s + 2
    interior = range(s + 1, n1 - s - 1)
    low = list(range(1, s + 1))
    high = list(range(n1 - s - 1, n1 - 1))
    along = range(1, n1 - 1)
    pairs = list(product(interior, interior))
    if variant is Variant.FOUR:
        pairs += product(low + high, along)
        pairs += product(interior, low + high)
    elif variant is Variant.THREE:
        pairs += product(low, along)
        pairs += product(interior, low + high)
    elif variant is Variant.TWO_ADJACENT:
        pairs += product(low, range(1, n1 - s - 1))
        pairs += product(interior, low)
    elif variant is Variant.TWO_OPPOSITE:
        pairs += product(interior, low + high)
    else:
        pairs += product(interior, low)
    return pairs


def _patch_functions(variant: Variant, s: int, k: int) -> list[MixedBasisFunction]:
    flags = EdgeFlags(CANONICAL_INNER[variant])
    ends_u = flags.inner_ends(0)
    ends_v = flags.inner_ends(1)
    n1 = k + s + 2
    interior = range(s + 1, n1 - s - 1)
    return [
        MixedBasisFunction(
            BasisBlock.S1 if j1 in interior and j2 in interior else BasisBlock.S1BAR,
            low_factor(j1, s, k, *ends_u),
            low_factor(j2, s, k, *ends_v),
        )
        for j1, j2 in patch_index_pairs(variant, s, k)
    ]


def build_patch_subspace(
    domain: MultiPatchDomain, patch: int, s: int, k: int
) -> list[SmoothBasisFunction]:
    """Functions supported on one patch that vanish to order s on its inner edges.

    A lone patch contributes its complete mixed degree space.
    """
    origin = Origin(OriginKind.PATCH, patch)
    if domain.is_single_patch:
        space = build(s, k, domain.patch_flags(patch))
        return [_function(origin, [PatchPiece.from_mixed(patch, f, s, k)]) for f in space.basis]
    variant, frame = domain.patch_flags(patch).canonical_frame()
    return [
        _function(origin, [PatchPiece.from_mixed(patch, f.mapped(frame, s, k), s, k)])
        for f in _patch_functions(variant, s, k)
    ]


def boundary_edge_index_pairs(
    s: int, k: int, valency1_start: bool, valency1_end: bool
) -> list[tuple[int, int]]:
    """(j1, j2) pairs of a boundary edge in its frame: j1 across the edge, j2 along it."""
    n1 = k + s + 2
    pairs = []
    for j1 in range(s + 1):
        lo = 2 * s + 1 - j1 if valency1_start else s + 1 - j1
        hi = n1 + j1 - 2 * s - 2 if valency1_end else n1 + j1 - s - 2
        pairs += [(j1, j2) for j2 in range(lo, hi + 1)]
    return pairs


def build_edge_subspace(
    domain: MultiPatchDomain, kind: EdgeKind, index: int, s: int, k: int
) -> list[SmoothBasisFunction]:
    """Functions attached to one inner or boundary edge, away from its vertices."""
    if kind is EdgeKind.INNER:
        basis = EdgeBasis(s, k, domain.inner_edges[index], domain.gluing_data[index])
        origin = Origin(OriginKind.INNER_EDGE, index)
        return [
            _function(origin, basis.pieces(j1, j2))
            for j1 in range(s + 1)
            for j2 in basis.window(j1)
        ]

    edge = domain.boundary_edges[index]
    start, end = (domain.vertices[v].valency == 1 for v in edge.vertices)
    frame = edge_frame(edge.side)
    origin = Origin(OriginKind.BOUNDARY_EDGE, index)
    functions = []
    for j1, j2 in boundary_edge_index_pairs(s, k, start, end):
        canonical = MixedBasisFunction(
            BasisBlock.S1, Factor(Degree.LOW, j1), low_factor(j2, s, k, not start, not end)
        )
        mapped = canonical.mapped(frame, s, k)
        functions.append(_function(origin, [PatchPiece.from_mixed(edge.patch, mapped, s, k)]))
    return functions


# ---------------------------------------------------------------------------
# Vertex subspaces
# ---------------------------------------------------------------------------


def _corner_functions(
    patch: int, frame: Dihedral, s: int, k: int, pairs: Iterable[tuple[int, int]], truncated: bool
) -> list[PatchPiece]:
    """N_a(η1) N_b(η2) of degree p1 in a corner frame, N_a truncated at η1 = 0 if requested."""
    out = []
    for a, b in pairs:
        fu = low_factor(a, s, k, True, False) if truncated else Factor(Degree.LOW, a)
        canonical = MixedBasisFunction(
            BasisBlock.S1BAR if truncated else BasisBlock.S1, fu, Factor(Degree.LOW, b)
        )
        out.append(PatchPiece.from_mixed(patch, canonical.mapped(frame, s, k), s, k))
    return out


def _truncated_corner_pairs(s: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(1, s + 1) for b in range(s + 1 - a)]


def _block_pieces(patch: int, frame: Dihedral, s: int, n2: int) -> list[PatchPiece]:
    """The (s+1)² degree p2 corner splines N_a N_b, a, b <= s, in a corner frame."""
    return [
        _canonical_piece(patch, frame, np.array([a]), np.array([b]), np.ones(1), n2)
        for a, b in product(range(s + 1), repeat=2)
    ]


def _edge_end(edge: InnerEdge, vertex: Vertex) -> bool:
    """Whether ``vertex`` sits at the η2 = 1 end of the edge."""
    return edge.vertices[1] == vertex.index and edge.vertices[0] != vertex.index


@dataclass(frozen=True)
class _Unknown:
    pieces: tuple[PatchPiece, ...]
    roles: tuple[tuple[int, str], ...]


@dataclass(frozen=True, eq=False)
class VertexSystem:
    """Linear jet constraints of a vertex and the candidate functions they act on."""

    vertex: Vertex
    matrix: np.ndarray
    unknowns: tuple[_Unknown, ...]


def _jet_matrix(space: UnivariateSpace, s: int) -> np.ndarray:
    """E[l, a] = N_a^{(l)}(0) h^l for l, a <= s."""
    h = float(space.mesh_size)
    values = space.eval_basis(0.0, s)[:, : s + 1]
    return values * (h ** np.arange(s + 1))[:, None]


def vertex_constraint_system(
    domain: MultiPatchDomain, vertex: Vertex, s: int, k: int
) -> VertexSystem:
    """Jet constraints of an inner vertex or a boundary vertex of valency >= 3.

    On every fan patch the function is g_A + g_B - f_Ω, with g_A and g_B built from
    the two edges at the corner and f_Ω a corner block; the s-jets of g_A, g_B and
    f_Ω must agree at the vertex. A boundary side contributes a corner block and
    truncated splines in place of an edge family.
    """
    high = mixed_spaces(s, k)[1]
    n2 = high.dimension
    fan = vertex.fan
    frames = [corner_frame(e.corner, e.first_side) for e in fan]
    unknowns: list[_Unknown] = []
    nu = len(fan)

    for rho, entry in enumerate(fan):
        kind, index = domain.edge_at(entry.patch, entry.second_side)
        if kind is not EdgeKind.INNER:
            continue
        edge = domain.inner_edges[index]
        basis = EdgeBasis(s, k, edge, domain.gluing_data[index])
        at_end = _edge_end(edge, vertex)
        nxt = (rho + 1) % nu
        for j1 in range(s + 1):
            for j2 in basis.near_vertex(j1, at_end):
                pieces = basis.pieces(j1, j2)
                by_patch = {p.patch: p for p in pieces}
                unknowns.append(
                    _Unknown(
                        (by_patch[entry.patch], by_patch[fan[nxt].patch]),
                        ((rho, "B"), (nxt, "A")),
                    )
                )

    for rho, entry in enumerate(fan):
        for piece in _block_pieces(entry.patch, frames[rho], s, n2):
            unknowns.append(_Unknown((piece,), ((rho, "O"),)))

    if vertex.boundary:
        ends = ((0, "A", fan[0].second_side), (nu - 1, "B", fan[-1].first_side))
        for rho, role, inner_side in ends:
            entry = fan[rho]
            for piece in _block_pieces(entry.patch, frames[rho], s, n2):
                unknowns.append(_Unknown((piece,), ((rho, role),)))
            inner_frame = corner_frame(entry.corner, inner_side)
            for piece in _corner_functions(
                entry.patch, inner_frame, s, k, _truncated_corner_pairs(s), truncated=True
            ):
                unknowns.append(_Unknown((piece,), ((rho, role),)))

    e = _jet_matrix(high, s)
    block = (s + 1) ** 2
    corner_flat = []
    for rho in range(nu):
        a, b = np.meshgrid(np.arange(s + 1), np.arange(s + 1), indexing="ij")
        i, j = frames[rho].map_indices(a, b, n2)
        corner_flat.append(i * n2 + j)

    sign = {"A": (1.0, 0.0), "B": (-1.0, 1.0), "O": (0.0, -1.0)}
    matrix = np.zeros((2 * block * nu, len(unknowns)))
    for col, unknown in enumerate(unknowns):
        for piece, (rho, role) in zip(unknown.pieces, unknown.roles, strict=True):
            coefficients = piece.gather(corner_flat[rho])
            jets = (e @ coefficients @ e.T).ravel()
            first, second = sign[role]
            matrix[2 * block * rho : 2 * block * rho + block, col] += first * jets
            matrix[2 * block * rho + block : 2 * block * (rho + 1), col] += second * jets
    return VertexSystem(vertex, matrix, tuple(unknowns))


def constraint_kernel(matrix: np.ndarray, tolerance: float, label: str = "") -> np.ndarray:
    """Normalized kernel basis K with K[pivots] = I.

    Columns are scaled to unit length before the rank decision, so unknowns that
    carry large edge factors such as γ_{j1} do not set the threshold on their own.

    Raises:
        KernelRankError: If a singular value lies within a factor 10 of the threshold
    """
    n = matrix.shape[1]
    if matrix.size == 0:
        return np.eye(n)
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0.0] = 1.0
    _, sigma, vt = scipy.linalg.svd(matrix / norms)
    threshold = tolerance * float(sigma.max(initial=0.0))
    ambiguous = sigma[(sigma > threshold / KERNEL_GAP) & (sigma < threshold * KERNEL_GAP)]
    if ambiguous.size:
        raise KernelRankError(
            f"{label}: numerical rank is ambiguous; singular values {ambiguous.tolist()} "
            f"lie near the threshold {threshold:.3e}"
        )
    rank = int(np.count_nonzero(sigma > threshold))
    null = vt[rank:].T
    if null.shape[1] == 0:
        return null
    _, _, pivots = scipy.linalg.qr(null.T, pivoting=True)
    chosen = np.sort(pivots[: null.shape[1]])
    unscaled = null / norms[:, None]
    kernel = unscaled @ np.linalg.inv(unscaled[chosen])
    kernel[np.abs(kernel) < COEFFICIENT_CUTOFF] = 0.0
    return kernel


def _signed(unknown: _Unknown) -> Iterator[tuple[PatchPiece, float]]:
    for piece, (_, role) in zip(unknown.pieces, unknown.roles, strict=True):
        yield piece, -1.0 if role == "O" else 1.0


def build_vertex_subspace(
    domain: MultiPatchDomain, vertex: Vertex, s: int, k: int, settings: Settings | None = None
) -> list[SmoothBasisFunction]:
    """Functions attached to one vertex.

    Raises:
        KernelRankError: If the constraint rank of an inner or high valency vertex is ambiguous
    """
    if domain.is_single_patch:
        return []
    settings = settings or Settings()
    origin = Origin(OriginKind.VERTEX, vertex.index)

    if vertex.valency == 1:
        entry = vertex.fan[0]
        frame = corner_frame(entry.corner, entry.first_side)
        pairs = [(a, b) for a in range(2 * s + 1) for b in range(2 * s + 1 - a)]
        return [
            _function(origin, [piece])
            for piece in _corner_functions(entry.patch, frame, s, k, pairs, truncated=False)
        ]

    if vertex.valency == 2 and vertex.boundary:
        first, second = vertex.fan
        _, index = domain.edge_at(first.patch, first.second_side)
        edge = domain.inner_edges[index]
        basis = EdgeBasis(s, k, edge, domain.gluing_data[index])
        at_end = _edge_end(edge, vertex)
        functions = [
            _function(origin, basis.pieces(j1, j2))
            for j1 in range(s + 1)
            for j2 in basis.near_vertex(j1, at_end)
        ]
        for entry, inner_side in ((first, first.second_side), (second, second.first_side)):
            frame = corner_frame(entry.corner, inner_side)
            functions += [
                _function(origin, [piece])
                for piece in _corner_functions(
                    entry.patch, frame, s, k, _truncated_corner_pairs(s), truncated=True
                )
            ]
        return functions

    system = vertex_constraint_system(domain, vertex, s, k)
    kernel = constraint_kernel(system.matrix, settings.kernel_tolerance, f"vertex {vertex.index}")
    n2 = mixed_spaces(s, k)[1].dimension
    patches = sorted({p.patch for u in system.unknowns for p in u.pieces})
    combined: dict[int, np.ndarray] = {}
    for patch in patches:
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        for col, unknown in enumerate(system.unknowns):
            for piece, sign in _signed(unknown):
                if piece.patch == patch:
                    rows.append(piece.flat)
                    cols.append(np.full(piece.flat.size, col))
                    vals.append(sign * piece.values)
        candidates = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n2 * n2, len(system.unknowns)),
        )
        combined[patch] = np.asarray(candidates @ kernel)

    functions = []
    for c in range(kernel.shape[1]):
        pieces = []
        for patch in patches:
            column = combined[patch][:, c]
            flat = np.flatnonzero(column)
            pieces.append(
                PatchPiece.from_entries(patch, flat // n2, flat % n2, column[flat], n2)
            )
        functions.append(_function(origin, pieces))
    logger.debug(
        "vertex_kernel_computed",
        vertex=vertex.index,
        valency=vertex.valency,
        boundary=vertex.boundary,
        unknowns=len(system.unknowns),
        constraints=system.matrix.shape[0],
        kernel_dimension=kernel.shape[1],
    )
    return functions


# ---------------------------------------------------------------------------
# The global space
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SmoothSpace:
    """W^s on a domain: the basis and its per-patch coefficient matrices."""

    s: int
    k: int
    domain: MultiPatchDomain
    basis: tuple[SmoothBasisFunction, ...]
    offsets: dict[OriginKind, slice]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def high(self) -> UnivariateSpace:
        return mixed_spaces(self.s, self.k)[1]

    @property
    def mesh_size(self) -> float:
        return 1.0 / (self.k + 1)

    @cached_property
    def patch_matrices(self) -> tuple[sp.csc_matrix, ...]:
        """Per patch, the (n2², dim) matrix whose column c holds φ_c's coefficients there."""
        n2 = self.high.dimension
        entries: dict[int, tuple[list[np.ndarray], list[np.ndarray], list[np.ndarray]]] = {
            p.index: ([], [], []) for p in self.domain.patches
        }
        for function in self.basis:
            for piece in function.pieces:
                rows, cols, vals = entries[piece.patch]
                rows.append(piece.flat)
                cols.append(np.full(piece.flat.size, function.id))
                vals.append(piece.values)
        out = []
        for patch in self.domain.patches:
            rows, cols, vals = entries[patch.index]
            if rows:
                matrix = sp.csc_matrix(
                    (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                    shape=(n2 * n2, self.dimension),
                )
            else:
                matrix = sp.csc_matrix((n2 * n2, self.dimension))
            out.append(matrix)
        return tuple(out)

    def evaluate(self, patch: int, points: np.ndarray, d1: int = 0, d2: int = 0) -> sp.csr_matrix:
        """∂^{(d1,d2)}(φ_c ∘ F) at parameter points of a patch, shape (m, dim)."""
        pts = np.atleast_2d(points)
        rows = tensor_rows(self.high, self.high, pts[:, 0], pts[:, 1], d1, d2)
        return sp.csr_matrix(rows @ self.patch_matrices[patch])

    def apply(self, patch: int, operator: DifferentialOperator, points: np.ndarray) -> sp.csr_matrix:
        """Rows of a pulled-back operator applied to every basis function, shape (m, dim)."""
        pts = np.atleast_2d(points)
        out = sp.csr_matrix((pts.shape[0], self.dimension))
        for (d1, d2), values in operator.coefficient_values().items():
            out = out + sp.diags(values) @ self.evaluate(patch, pts, d1, d2)
        return sp.csr_matrix(out)

    def function_values(
        self, coefficients: np.ndarray, patch: int, points: np.ndarray, d1: int = 0, d2: int = 0
    ) -> np.ndarray:
        """Derivatives of the spline Σ c_i φ_i on one patch."""
        return np.asarray(self.evaluate(patch, points, d1, d2) @ coefficients)

    def coefficient_rank(self, tolerance: float) -> int:
        """Numerical rank of the stacked per-patch coefficient matrix."""
        stacked = sp.vstack(self.patch_matrices).tocsr()
        used = np.unique(stacked.nonzero()[0])
        dense = stacked[used].toarray()
        if dense.size == 0:
            return 0
        sigma = scipy.linalg.svdvals(dense)
        return int(np.count_nonzero(sigma > tolerance * sigma.max()))

    def export_lines(self) -> Iterator[str]:
        """Sparse coefficient dump: function, origin, patch, j1, j2, coefficient."""
        n2 = self.high.dimension
        yield "function,origin,patch,j1,j2,coefficient"
        for function in self.basis:
            for piece in function.pieces:
                for flat, value in zip(piece.flat, piece.values, strict=True):
                    yield (
                        f"{function.id},{function.origin},{piece.patch},"
                        f"{flat // n2},{flat % n2},{value:.17g}"
                    )


def minimum_inner_knots(domain: MultiPatchDomain, s: int) -> int:
    """Fewest inner knots for which no two vertex subspaces share a basis index.

    The corner blocks of two valency-one vertices on the same boundary edge each
    reach 2s indices along it, so such an edge needs n_{p1} - 1 > 4s.
    """
    if domain.is_single_patch:
        return 2 * s + 1
    corner_to_corner = any(
        all(domain.vertices[v].valency == 1 for v in edge.vertices)
        for edge in domain.boundary_edges
    )
    return 3 * s if corner_to_corner else 2 * s + 1


def build_smooth_space(
    domain: MultiPatchDomain, s: int, k: int, settings: Settings | None = None
) -> SmoothSpace:
    """Assemble W^s = ⊕ patch ⊕ edge ⊕ vertex subspaces.

    Args:
        domain: Oriented multi-patch domain
        s: Smoothness, 2 or 4
        k: Inner knots per direction, at least :func:`minimum_inner_knots`
        settings: Tolerances; defaults from the environment

    Returns:
        The space with basis ordered patches, inner edges, boundary edges, vertices

    Raises:
        ParameterError: For unsupported s or too few knots
        SpaceConstructionError: If the rank audit finds dependent functions
    """
    settings = settings or Settings()
    if s not in (2, 4):
        raise ParameterError(f"smoothness must be 2 or 4, got {s}")
    if k < 2 * s + 1:
        raise ParameterError(f"the smooth space needs k >= 2s+1 = {2 * s + 1}, got {k}")
    if k < minimum_inner_knots(domain, s):
        raise ParameterError(
            f"a boundary edge between two valency-one corners of {domain.name} needs "
            f"k >= 3s = {3 * s}, got {k}"
        )

    groups: list[tuple[OriginKind, list[SmoothBasisFunction]]] = []
    patch_functions = [f for p in domain.patches for f in build_patch_subspace(domain, p.index, s, k)]
    groups.append((OriginKind.PATCH, patch_functions))
    groups.append(
        (
            OriginKind.INNER_EDGE,
            [
                f
                for e in domain.inner_edges
                for f in build_edge_subspace(domain, EdgeKind.INNER, e.index, s, k)
            ],
        )
    )
    groups.append(
        (
            OriginKind.BOUNDARY_EDGE,
            []
            if domain.is_single_patch
            else [
                f
                for e in domain.boundary_edges
                for f in build_edge_subspace(domain, EdgeKind.BOUNDARY, e.index, s, k)
            ],
        )
    )
    groups.append(
        (
            OriginKind.VERTEX,
            [f for v in domain.vertices for f in build_vertex_subspace(domain, v, s, k, settings)],
        )
    )

    basis: list[SmoothBasisFunction] = []
    offsets: dict[OriginKind, slice] = {}
    for kind, functions in groups:
        start = len(basis)
        basis += [replace(f, id=start + i) for i, f in enumerate(functions)]
        offsets[kind] = slice(start, len(basis))

    space = SmoothSpace(s, k, domain, tuple(basis), offsets)
    if space.dimension <= settings.rank_audit_max_dim:
        rank = space.coefficient_rank(settings.rank_tolerance)
        if rank != space.dimension:
            raise SpaceConstructionError(
                f"basis of dimension {space.dimension} has numerical rank {rank}"
            )
    logger.info(
        "smooth_space_built",
        domain=domain.name,
        s=s,
        k=k,
        dimension=space.dimension,
        **{kind.value.replace("-", "_"): offsets[kind].stop - offsets[kind].start for kind in offsets},
    )
    return space


def check_gluing_conditions(
    domain: MultiPatchDomain, s: int, k: int, samples: int = 9
) -> list[GluingCheck]:
    """Physical derivative jumps of the inner edge functions across their edges.

    Every function of every inner edge, vertex-coupled indices included, is
    differentiated up to total order s on both patches at sample points of the edge.
    """
    t = np.linspace(0.0, 1.0, samples + 2)[1:-1]
    eta = np.column_stack([np.zeros_like(t), t])
    n2 = mixed_spaces(s, k)[1].dimension
    high = mixed_spaces(s, k)[1]
    checks = []
    for edge, data in zip(domain.inner_edges, domain.gluing_data, strict=True):
        basis = EdgeBasis(s, k, edge, data)
        indices = [(j1, j2) for j1 in range(s + 1) for j2 in range(basis.trace_dimension(j1))]
        matrices = []
        for tau in (0, 1):
            rows, cols, vals = [], [], []
            for col, (j1, j2) in enumerate(indices):
                piece = basis.pieces(j1, j2)[tau]
                rows.append(piece.flat)
                cols.append(np.full(piece.flat.size, col))
                vals.append(piece.values)
            matrices.append(
                sp.csr_matrix(
                    (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                    shape=(n2 * n2, len(indices)),
                )
            )
        values = []
        for tau in (0, 1):
            patch = domain.patches[edge.patches[tau]]
            points = edge.frames[tau].apply(eta)
            geo = GeometryJets.at(patch, points)
            per_order = []
            for a in range(s + 1):
                for b in range(s + 1 - a):
                    op = physical_derivative(geo, a, b)
                    total = np.zeros((points.shape[0], len(indices)))
                    for (d1, d2), coeff in op.coefficient_values().items():
                        rows_ = tensor_rows(high, high, points[:, 0], points[:, 1], d1, d2)
                        total += coeff[:, None] * np.asarray((rows_ @ matrices[tau]).todense())
                    per_order.append(total)
            values.append(np.stack(per_order))
        scale = np.maximum(np.abs(values[0]), np.abs(values[1])).max(axis=(0, 1))
        scale = np.where(scale > 0.0, scale, 1.0)
        worst = float((np.abs(values[0] - values[1]) / scale).max())
        checks.append(GluingCheck(edge.index, len(indices), samples, worst))
        logger.debug("gluing_checked", edge=edge.index, functions=len(indices), max_jump=worst)
    return checks
