"""Multi-patch domains: patch mappings, topology, gluing data and geometry files."""

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Any, Protocol

import numpy as np
import structlog

from .dihedral import Corner, Dihedral, Side, edge_frame
from .exceptions import (
    GeometryFileError,
    GluingError,
    OrientationError,
    ParameterError,
    RegularityError,
    TopologyError,
)
from .mixed_space import EdgeFlags
from .spline_kernel import TensorSpace, UnivariateSpace, make_space
from .utils import parse_rational

logger = structlog.get_logger(__name__)

REGULARITY_GRID = 30
MATCH_SAMPLES = 50
LINEARITY_SAMPLES = 21


class GeometryMapping(Protocol):
    """Polynomial map of [0,1]² into the plane."""

    def jet(self, points: np.ndarray, order: int) -> np.ndarray:
        """Partial derivatives ∂^{(d1,d2)}F, d1, d2 <= order, shape (order+1, order+1, m, 2)."""
        ...

    def to_dict(self) -> dict[str, Any]: ...


def _number(value: Fraction | float) -> str | float:
    if isinstance(value, Fraction):
        return str(value)
    return float(value)


@dataclass(frozen=True, eq=False)
class BilinearMapping:
    """F(ξ) = Σ c[a][b] B_a(ξ1) B_b(ξ2) with B_0 = 1 - x and B_1 = x, so c[a][b] = F(a, b)."""

    corners: tuple[tuple[tuple[Fraction | float, Fraction | float], ...], ...]

    @cached_property
    def _net(self) -> np.ndarray:
        return np.array([[[float(x) for x in c] for c in row] for row in self.corners])

    def jet(self, points: np.ndarray, order: int) -> np.ndarray:
        pts = np.atleast_2d(points)
        out = np.zeros((order + 1, order + 1, pts.shape[0], 2))
        for d1 in range(min(order, 1) + 1):
            for d2 in range(min(order, 1) + 1):
                bu = _linear_basis(pts[:, 0], d1)
                bv = _linear_basis(pts[:, 1], d2)
                out[d1, d2] = np.einsum("ma,abx,mb->mx", bu, self._net, bv)
        return out

    def to_dict(self) -> dict[str, Any]:
        flat = [c for row in self.corners for c in row]
        return {"type": "bilinear", "corners": [[_number(x), _number(y)] for x, y in flat]}


def _linear_basis(x: np.ndarray, deriv: int) -> np.ndarray:
    if deriv == 0:
        return np.column_stack([1.0 - x, x])
    return np.column_stack([-np.ones_like(x), np.ones_like(x)])


@dataclass(frozen=True, eq=False)
class SplineMapping:
    """Tensor spline geometry Σ c_{j1,j2} N_{j1}(ξ1) N_{j2}(ξ2)."""

    space: UnivariateSpace
    control_net: tuple[tuple[tuple[Fraction | float, Fraction | float], ...], ...]

    def __post_init__(self) -> None:
        n = self.space.dimension
        if len(self.control_net) != n or any(len(row) != n for row in self.control_net):
            raise GeometryFileError(f"control net must be {n} x {n} for the given space")

    @cached_property
    def _net(self) -> np.ndarray:
        return np.array([[[float(x) for x in c] for c in row] for row in self.control_net])

    def jet(self, points: np.ndarray, order: int) -> np.ndarray:
        pts = np.atleast_2d(points)
        tensor = TensorSpace(self.space, self.space)
        out = np.zeros((order + 1, order + 1, pts.shape[0], 2))
        for d1 in range(order + 1):
            for d2 in range(order + 1):
                out[d1, d2] = tensor.evaluate(self._net, pts, d1, d2)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": "spline",
            "degree": self.space.degree,
            "regularity": self.space.regularity,
            "k": self.space.inner_knot_count,
            "control_net": [[_number(x), _number(y)] for row in self.control_net for x, y in row],
        }


@dataclass(frozen=True, eq=False)
class Patch:
    """One patch Ω^{(i)} = F^{(i)}((0,1)²)."""

    index: int
    mapping: BilinearMapping | SplineMapping

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.jet(points, 0)[0, 0]

    def jet(self, points: np.ndarray, order: int) -> np.ndarray:
        """All partial derivatives ∂^{(d1,d2)}F^{(i)} with d1, d2 <= order."""
        return self.mapping.jet(np.atleast_2d(np.asarray(points, dtype=float)), order)

    def determinant(self, points: np.ndarray) -> np.ndarray:
        j = self.jet(points, 1)
        return j[1, 0, :, 0] * j[0, 1, :, 1] - j[1, 0, :, 1] * j[0, 1, :, 0]

    @cached_property
    def orientation(self) -> int:
        """Sign of det JF, constant on a regular patch."""
        t = np.linspace(0.0, 1.0, REGULARITY_GRID)
        grid = np.array([(u, v) for u in t for v in t])
        det = self.determinant(grid)
        scale = np.abs(det).max(initial=0.0)
        if scale == 0.0 or not (np.all(det > 1e-12 * scale) or np.all(det < -1e-12 * scale)):
            raise RegularityError(f"patch {self.index}: det JF vanishes or changes sign")
        return 1 if det[0] > 0 else -1

    def side_curve(self, side: Side, ts: np.ndarray) -> np.ndarray:
        """Points of a side, parameterized by the free patch coordinate."""
        t = np.asarray(ts, dtype=float)
        constant = np.full_like(t, 1.0 if side.at_one else 0.0)
        pts = np.column_stack([constant, t] if side.axis == 0 else [t, constant])
        return self(pts)

    def corner_point(self, corner: Corner) -> np.ndarray:
        return self(np.array([corner.point], dtype=float))[0]

    def outward_normals(self, side: Side, points: np.ndarray) -> np.ndarray:
        """Unit outward normals at parameter points on a side, shape (m, 2)."""
        j = self.jet(points, 1)
        along = 1 - side.axis
        tangent = j[1, 0] if along == 0 else j[0, 1]
        inward = j[1, 0] if side.axis == 0 else j[0, 1]
        if side.at_one:
            inward = -inward
        normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
        normal /= np.linalg.norm(normal, axis=1)[:, None]
        flip = np.einsum("mx,mx->m", normal, inward) > 0.0
        normal[flip] *= -1.0
        return normal


def frame_jet(patch: Patch, frame: Dihedral, eta: np.ndarray, order: int) -> np.ndarray:
    """Derivatives of G = F∘D in the canonical coordinates η of a frame."""
    raw = patch.jet(frame.apply(np.atleast_2d(eta)), order)
    out = np.zeros_like(raw)
    for d1 in range(order + 1):
        for d2 in range(order + 1):
            e1, e2, sign = frame.derivative_map(d1, d2)
            out[d1, d2] = sign * raw[e1, e2]
    return out


class EdgeKind(str, Enum):
    INNER = "inner"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class InnerEdgeSpec:
    """Inner edge as written in a geometry file."""

    patch_a: int
    side_a: Side
    patch_b: int
    side_b: Side
    reversed: bool = False


@dataclass(frozen=True)
class InnerEdge:
    """Edge shared by patches i0 and i1, canonical frames included.

    ``frames[τ]`` places the edge of patch ``patches[τ]`` at η1 = 0 such that
    F^{(i0)}(frame0(0, t)) = F^{(i1)}(frame1(0, t)); patch i0 is the one with
    negative det in its canonical frame.
    """

    index: int
    patches: tuple[int, int]
    sides: tuple[Side, Side]
    frames: tuple[Dihedral, Dihedral]
    vertices: tuple[int, int] = (-1, -1)


@dataclass(frozen=True)
class BoundaryEdge:
    index: int
    patch: int
    side: Side
    vertices: tuple[int, int] = (-1, -1)


@dataclass(frozen=True)
class FanEntry:
    """A patch around a vertex; ``second_side`` is shared with the next entry's ``first_side``."""

    patch: int
    corner: Corner
    first_side: Side
    second_side: Side


@dataclass(frozen=True)
class Vertex:
    index: int
    point: tuple[float, float]
    fan: tuple[FanEntry, ...]
    boundary: bool

    @property
    def valency(self) -> int:
        return len(self.fan)


@dataclass(frozen=True)
class LinearFunction:
    """Linear polynomial given by its values at 0 and 1."""

    at0: float
    at1: float

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        return self.at0 + (self.at1 - self.at0) * np.asarray(t, dtype=float)

    def integral(self) -> float:
        return 0.5 * (self.at0 + self.at1)

    def square_integral(self) -> float:
        return (self.at0**2 + self.at0 * self.at1 + self.at1**2) / 3.0


@dataclass(frozen=True)
class GluingData:
    """Gluing functions α^{(τ)}, β^{(τ)} of one inner edge in its canonical frames."""

    edge: int
    lam: float
    alpha: tuple[LinearFunction, LinearFunction]
    beta: tuple[LinearFunction, LinearFunction]


@dataclass(frozen=True, eq=False)
class MultiPatchDomain:
    """Patches, edges and vertices of a planar multi-patch domain."""

    name: str
    patches: tuple[Patch, ...]
    inner_edges: tuple[InnerEdge, ...]
    boundary_edges: tuple[BoundaryEdge, ...]
    vertices: tuple[Vertex, ...]
    gluing_data: tuple[GluingData, ...] = field(default=())

    @property
    def is_single_patch(self) -> bool:
        return len(self.patches) == 1

    @cached_property
    def edge_lookup(self) -> dict[tuple[int, Side], tuple[EdgeKind, int]]:
        table: dict[tuple[int, Side], tuple[EdgeKind, int]] = {}
        for edge in self.inner_edges:
            for patch, side in zip(edge.patches, edge.sides, strict=True):
                table[(patch, side)] = (EdgeKind.INNER, edge.index)
        for b in self.boundary_edges:
            table[(b.patch, b.side)] = (EdgeKind.BOUNDARY, b.index)
        return table

    def edge_at(self, patch: int, side: Side) -> tuple[EdgeKind, int]:
        return self.edge_lookup[(patch, side)]

    def patch_flags(self, patch: int) -> EdgeFlags:
        """Inner sides of a patch; a lone patch treats all four sides as inner."""
        if self.is_single_patch:
            return EdgeFlags(frozenset(Side))
        return EdgeFlags(
            frozenset(
                side for side in Side if self.edge_at(patch, side)[0] is EdgeKind.INNER
            )
        )

    def boundary_sides(self, patch: int) -> list[Side]:
        """Patch sides lying on the domain boundary."""
        return [side for side in Side if self.edge_at(patch, side)[0] is EdgeKind.BOUNDARY]

    @cached_property
    def diameter(self) -> float:
        t = np.linspace(0.0, 1.0, 33)
        pts = np.vstack([p.side_curve(side, t) for p in self.patches for side in Side])
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))

    def vertex_at(self, patch: int, corner: Corner) -> Vertex:
        for vertex in self.vertices:
            if any(e.patch == patch and e.corner is corner for e in vertex.fan):
                return vertex
        raise TopologyError(f"patch {patch} corner {corner.value} has no vertex")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "patches": [p.mapping.to_dict() for p in self.patches],
            "inner_edges": [
                {
                    "patch_a": e.patches[0],
                    "side_a": e.sides[0].value,
                    "patch_b": e.patches[1],
                    "side_b": e.sides[1].value,
                    "reversed": _runs_backward(e.frames[0], e.sides[0])
                    != _runs_backward(e.frames[1], e.sides[1]),
                }
                for e in self.inner_edges
            ],
        }


def _sides_match(a: Patch, sa: Side, b: Patch, sb: Side, tol: float) -> bool | None:
    """True for a forward match, False for a reversed one, None otherwise."""
    t = np.linspace(0.0, 1.0, 7)
    ca = a.side_curve(sa, t)
    cb = b.side_curve(sb, t)
    if np.abs(ca - cb).max() <= tol:
        return True
    if np.abs(ca - cb[::-1]).max() <= tol:
        return False
    return None


def infer_inner_edges(patches: tuple[Patch, ...], tol: float = 1e-9) -> list[InnerEdgeSpec]:
    """Detect shared sides geometrically by comparing sampled side curves."""
    specs: list[InnerEdgeSpec] = []
    used: set[tuple[int, Side]] = set()
    for a, b in combinations(patches, 2):
        for sa in Side:
            for sb in Side:
                if (a.index, sa) in used or (b.index, sb) in used:
                    continue
                match = _sides_match(a, sa, b, sb, tol)
                if match is None:
                    continue
                specs.append(InnerEdgeSpec(a.index, sa, b.index, sb, reversed=not match))
                used.update({(a.index, sa), (b.index, sb)})
    return specs


def _orient_edge(index: int, spec: InnerEdgeSpec, patches: tuple[Patch, ...], tol: float) -> InnerEdge:
    pa, pb = patches[spec.patch_a], patches[spec.patch_b]
    fa = edge_frame(spec.side_a)
    fb = edge_frame(spec.side_b, reverse=spec.reversed)
    t = np.linspace(0.0, 1.0, MATCH_SAMPLES)
    eta = np.column_stack([np.zeros_like(t), t])
    deviation = np.abs(pa(fa.apply(eta)) - pb(fb.apply(eta))).max()
    if deviation > tol:
        raise TopologyError(
            f"inner edge {index}: patch {spec.patch_a} {spec.side_a.value} and patch "
            f"{spec.patch_b} {spec.side_b.value} differ by {deviation:.3e}"
        )
    mid = np.array([[0.0, 0.5]])
    da = _frame_determinant(pa, fa, mid)[0]
    db = _frame_determinant(pb, fb, mid)[0]
    if da * db >= 0.0:
        raise OrientationError(
            f"inner edge {index}: patches {spec.patch_a} and {spec.patch_b} lie on the same side"
        )
    if da < 0.0:
        return InnerEdge(index, (pa.index, pb.index), (spec.side_a, spec.side_b), (fa, fb))
    return InnerEdge(index, (pb.index, pa.index), (spec.side_b, spec.side_a), (fb, fa))


def _frame_determinant(patch: Patch, frame: Dihedral, eta: np.ndarray) -> np.ndarray:
    j = frame_jet(patch, frame, eta, 1)
    return j[1, 0, :, 0] * j[0, 1, :, 1] - j[1, 0, :, 1] * j[0, 1, :, 0]


def _build_vertices(
    patches: tuple[Patch, ...],
    lookup: dict[tuple[int, Side], tuple[EdgeKind, int]],
    inner_edges: list[InnerEdge],
    tol: float,
) -> list[Vertex]:
    groups: list[tuple[np.ndarray, list[tuple[int, Corner]]]] = []
    for patch in patches:
        for corner in Corner:
            point = patch.corner_point(corner)
            for anchor, members in groups:
                if np.linalg.norm(anchor - point) <= tol:
                    members.append((patch.index, corner))
                    break
            else:
                groups.append((point, [(patch.index, corner)]))

    def across(patch: int, side: Side, members: list[tuple[int, Corner]]) -> tuple[int, Corner, Side]:
        edge = inner_edges[lookup[(patch, side)][1]]
        tau = 0 if edge.patches[0] == patch and edge.sides[0] is side else 1
        other, other_side = edge.patches[1 - tau], edge.sides[1 - tau]
        corner = next(c for q, c in members if q == other and other_side in c.sides)
        return other, corner, other_side

    vertices: list[Vertex] = []
    for anchor, members in groups:
        is_boundary = any(
            lookup[(p, side)][0] is EdgeKind.BOUNDARY for p, c in members for side in c.sides
        )
        if is_boundary:
            starts = sorted(
                (p, c, side)
                for p, c in members
                for side in c.sides
                if lookup[(p, side)][0] is EdgeKind.BOUNDARY
            )
            patch, corner, first = starts[0]
        else:
            patch, corner = min(members)
            first = corner.sides[0]
        fan: list[FanEntry] = []
        while True:
            second = next(side for side in corner.sides if side is not first)
            fan.append(FanEntry(patch, corner, first, second))
            if lookup[(patch, second)][0] is EdgeKind.BOUNDARY:
                break
            patch, corner, first = across(patch, second, members)
            if not is_boundary and patch == fan[0].patch:
                break
            if len(fan) > len(members):
                raise TopologyError(f"vertex at {anchor.tolist()}: patch fan does not close")
        if len(fan) != len(members):
            raise TopologyError(
                f"vertex at {anchor.tolist()}: fan reaches {len(fan)} of {len(members)} patches"
            )
        vertices.append(
            Vertex(len(vertices), (float(anchor[0]), float(anchor[1])), tuple(fan), is_boundary)
        )
    return vertices


def _edge_vertices(patch: int, frame: Dihedral, vertices: list[Vertex]) -> tuple[int, int]:
    """Vertices at η2 = 0 and η2 = 1 of an edge in its canonical frame."""
    ends = []
    for t in (0.0, 1.0):
        corner = frame.map_corner(Corner.at(0, int(t)))
        ends.append(
            next(
                vx.index
                for vx in vertices
                if any(e.patch == patch and e.corner is corner for e in vx.fan)
            )
        )
    return ends[0], ends[1]


def _runs_backward(frame: Dihedral, side: Side) -> bool:
    return frame.flip_v if side.axis == 0 else frame.flip_u


def gluing(domain: MultiPatchDomain, edge: InnerEdge, tolerance: float = 1e-9) -> GluingData:
    """Gluing functions of an inner edge.

    α^{(τ)} = λ d_τ with d_τ(t) = det JG_τ(0, t) in the canonical frames, λ from the
    least-squares fit of α toward ∓1, and β^{(τ)} = ∂1G·∂2G / |∂2G|².

    Raises:
        GluingError: If d or β is not linear within ``tolerance``
        OrientationError: If the signs of d are wrong or λ <= 0
    """
    t = np.linspace(0.0, 1.0, LINEARITY_SAMPLES)
    eta = np.column_stack([np.zeros_like(t), t])
    dets: list[LinearFunction] = []
    betas: list[LinearFunction] = []
    for tau in (0, 1):
        patch = domain.patches[edge.patches[tau]]
        j = frame_jet(patch, edge.frames[tau], eta, 1)
        d1, d2 = j[1, 0], j[0, 1]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        beta = np.einsum("mx,mx->m", d1, d2) / np.einsum("mx,mx->m", d2, d2)
        for name, values in (("det", det), ("beta", beta)):
            fit = LinearFunction(float(values[0]), float(values[-1]))
            residual = float(np.abs(values - fit(t)).max())
            if residual > tolerance:
                raise GluingError(
                    f"inner edge {edge.index}, patch {patch.index}: {name} is not linear "
                    f"(residual {residual:.3e}); geometry is not bilinear-like G^s"
                )
        dets.append(LinearFunction(float(det[0]), float(det[-1])))
        betas.append(LinearFunction(float(beta[0]), float(beta[-1])))

    d0, d1_ = dets
    if not (max(d0.at0, d0.at1) < 0.0 < min(d1_.at0, d1_.at1)):
        raise OrientationError(f"inner edge {edge.index}: determinant signs are not -/+")
    lam = (d1_.integral() - d0.integral()) / (d0.square_integral() + d1_.square_integral())
    if lam <= 0.0:
        raise OrientationError(f"inner edge {edge.index}: λ = {lam} is not positive")
    alpha = (
        LinearFunction(lam * d0.at0, lam * d0.at1),
        LinearFunction(lam * d1_.at0, lam * d1_.at1),
    )
    return GluingData(edge.index, lam, alpha, (betas[0], betas[1]))


def build_domain(
    name: str,
    patches: list[BilinearMapping | SplineMapping],
    inner_edges: list[InnerEdgeSpec] | None = None,
    linearity_tolerance: float = 1e-9,
) -> MultiPatchDomain:
    """Assemble and validate a multi-patch domain.

    Args:
        name: Domain label
        patches: Patch mappings in patch index order
        inner_edges: Shared sides; inferred geometrically when omitted
        linearity_tolerance: Tolerance of the bilinear-like G^s checks

    Returns:
        The oriented domain with gluing data for every inner edge

    Raises:
        RegularityError: For a singular or folded patch
        TopologyError: For mismatched edges or broken vertex fans
        GluingError: For inner edges that are not bilinear-like G^s
    """
    built = tuple(Patch(i, mapping) for i, mapping in enumerate(patches))
    for patch in built:
        _ = patch.orientation

    corners = np.array([p.corner_point(c) for p in built for c in Corner])
    scale = max(1.0, float(np.linalg.norm(corners.max(axis=0) - corners.min(axis=0))))
    tol = 1e-12 * scale * 10

    specs = infer_inner_edges(built, tol * 100) if inner_edges is None else inner_edges
    for spec in specs:
        for patch in (spec.patch_a, spec.patch_b):
            if not 0 <= patch < len(built):
                raise TopologyError(f"inner edge refers to unknown patch {patch}")
    oriented = [_orient_edge(i, spec, built, tol) for i, spec in enumerate(specs)]

    lookup: dict[tuple[int, Side], tuple[EdgeKind, int]] = {}
    for edge in oriented:
        for patch, side in zip(edge.patches, edge.sides, strict=True):
            if (patch, side) in lookup:
                raise TopologyError(f"patch {patch} {side.value} belongs to two inner edges")
            lookup[(patch, side)] = (EdgeKind.INNER, edge.index)
    boundary: list[tuple[int, Side]] = [
        (p.index, side) for p in built for side in Side if (p.index, side) not in lookup
    ]
    for i, key in enumerate(boundary):
        lookup[key] = (EdgeKind.BOUNDARY, i)

    vertices = _build_vertices(built, lookup, oriented, tol * 100)
    oriented = [
        InnerEdge(
            e.index,
            e.patches,
            e.sides,
            e.frames,
            _edge_vertices(e.patches[0], e.frames[0], vertices),
        )
        for e in oriented
    ]
    boundary_edges = tuple(
        BoundaryEdge(i, patch, side, _edge_vertices(patch, edge_frame(side), vertices))
        for i, (patch, side) in enumerate(boundary)
    )
    domain = MultiPatchDomain(name, built, tuple(oriented), boundary_edges, tuple(vertices))
    data = tuple(gluing(domain, edge, linearity_tolerance) for edge in domain.inner_edges)
    domain = MultiPatchDomain(
        name, built, tuple(oriented), boundary_edges, tuple(vertices), gluing_data=data
    )
    logger.info(
        "domain_built",
        domain=name,
        patches=len(built),
        inner_edges=len(oriented),
        boundary_edges=len(boundary_edges),
        vertices=len(vertices),
    )
    return domain


def _point(raw: Any, where: str) -> tuple[Fraction, Fraction]:
    if not isinstance(raw, list | tuple) or len(raw) != 2:
        raise GeometryFileError(f"{where}: expected [x, y], got {raw!r}")
    try:
        return parse_rational(raw[0]), parse_rational(raw[1])
    except ParameterError as e:
        raise GeometryFileError(f"{where}: {e}") from e


def _parse_patch(raw: Any, i: int) -> BilinearMapping | SplineMapping:
    if not isinstance(raw, dict):
        raise GeometryFileError(f"patch {i}: expected an object")
    kind = raw.get("type")
    if kind == "bilinear":
        corners = raw.get("corners")
        if not isinstance(corners, list) or len(corners) != 4:
            raise GeometryFileError(f"patch {i}: bilinear patches need four corners")
        pts = [_point(c, f"patch {i} corner {j}") for j, c in enumerate(corners)]
        return BilinearMapping(((pts[0], pts[1]), (pts[2], pts[3])))
    if kind == "spline":
        try:
            space = make_space(int(raw["degree"]), int(raw["regularity"]), int(raw["k"]))
        except (KeyError, TypeError, ValueError, ParameterError) as e:
            raise GeometryFileError(f"patch {i}: invalid spline space: {e}") from e
        net = raw.get("control_net")
        n = space.dimension
        if not isinstance(net, list) or len(net) != n * n:
            raise GeometryFileError(f"patch {i}: control net needs {n * n} points")
        pts = [_point(c, f"patch {i} control point {j}") for j, c in enumerate(net)]
        rows = tuple(tuple(pts[a * n : (a + 1) * n]) for a in range(n))
        return SplineMapping(space, rows)
    raise GeometryFileError(f"patch {i}: unknown type {kind!r}")


def _parse_edge(raw: Any, i: int) -> InnerEdgeSpec:
    try:
        return InnerEdgeSpec(
            int(raw["patch_a"]),
            Side(raw["side_a"]),
            int(raw["patch_b"]),
            Side(raw["side_b"]),
            bool(raw.get("reversed", False)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise GeometryFileError(f"inner edge {i}: {e}") from e


def domain_from_dict(data: dict[str, Any], linearity_tolerance: float = 1e-9) -> MultiPatchDomain:
    """Build a domain from the geometry file schema."""
    raw_patches = data.get("patches")
    if not isinstance(raw_patches, list) or not raw_patches:
        raise GeometryFileError("geometry needs a non-empty 'patches' list")
    patches = [_parse_patch(p, i) for i, p in enumerate(raw_patches)]
    raw_edges = data.get("inner_edges")
    specs = None if raw_edges is None else [_parse_edge(e, i) for i, e in enumerate(raw_edges)]
    return build_domain(str(data.get("name", "file")), patches, specs, linearity_tolerance)


def load_geometry(path: Path | str, linearity_tolerance: float = 1e-9) -> MultiPatchDomain:
    """Load a multi-patch domain from a JSON geometry file.

    Raises:
        GeometryFileError: If the file is unreadable or violates the schema
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise GeometryFileError(f"cannot read geometry file {path}: {e}") from e
    if not isinstance(data, dict):
        raise GeometryFileError("geometry file must contain a JSON object")
    return domain_from_dict(data, linearity_tolerance)


def export_geometry(domain: MultiPatchDomain) -> str:
    """Serialize a domain in the geometry file schema."""
    return json.dumps(domain.to_dict(), indent=2)
