"""Strong-form collocation: operator rows, assembly, linear solve and error norms."""

import math
import time
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import structlog
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as P
from scipy.sparse.linalg import norm as sparse_norm
from scipy.sparse.linalg import splu

from .collocation import CollocationPoint, PointScheme, PointTag, assemble_global
from .config import Problem, Scheme, Settings
from .dihedral import Side
from .exceptions import RankDeficiencyError, SolverError
from .geometry import MultiPatchDomain, Patch
from .jets import Jet2
from .models import ErrorReport, SolveReport
from .operators import (
    DifferentialOperator,
    GeometryJets,
    biharmonic_operator,
    gradient_operators,
    laplace_gradient_operators,
    laplace_operator,
    normal_derivative_operator,
)
from .smooth_space import SmoothSpace, build_smooth_space
from .utils import mesh_label

logger = structlog.get_logger(__name__)


# ---------------------------------------------------------------------------
# Manufactured solutions
# ---------------------------------------------------------------------------


class ManufacturedSolution:
    """Exact solution known through its partial derivatives in physical coordinates."""

    def derivative(self, x: np.ndarray, a: int, b: int) -> np.ndarray:
        raise NotImplementedError

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.derivative(x, 0, 0)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.column_stack([self.derivative(x, 1, 0), self.derivative(x, 0, 1)])

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        return self.derivative(x, 2, 0) + self.derivative(x, 0, 2)

    def laplacian_gradient(self, x: np.ndarray) -> np.ndarray:
        return np.column_stack(
            [
                self.derivative(x, 3, 0) + self.derivative(x, 1, 2),
                self.derivative(x, 2, 1) + self.derivative(x, 0, 3),
            ]
        )

    def bilaplacian(self, x: np.ndarray) -> np.ndarray:
        return (
            self.derivative(x, 4, 0)
            + 2.0 * self.derivative(x, 2, 2)
            + self.derivative(x, 0, 4)
        )


@dataclass(frozen=True)
class TrigonometricSolution(ManufacturedSolution):
    """u = cos(x1) sin(x2), so Δu = -2u and Δ²u = 4u."""

    def derivative(self, x: np.ndarray, a: int, b: int) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.cos(x[:, 0] + a * math.pi / 2) * np.sin(x[:, 1] + b * math.pi / 2)


@dataclass(frozen=True, eq=False)
class PolynomialSolution(ManufacturedSolution):
    """u = Σ c[i, j] x1^i x2^j."""

    coefficients: np.ndarray

    @classmethod
    def random(cls, degree: int, rng: np.random.Generator) -> "PolynomialSolution":
        c = rng.uniform(-1.0, 1.0, size=(degree + 1, degree + 1))
        total = np.add.outer(np.arange(degree + 1), np.arange(degree + 1))
        c[total > degree] = 0.0
        return cls(c)

    def derivative(self, x: np.ndarray, a: int, b: int) -> np.ndarray:
        x = np.atleast_2d(x)
        c = P.polyder(P.polyder(self.coefficients, m=a, axis=0), m=b, axis=1)
        return np.asarray(P.polyval2d(x[:, 0], x[:, 1], c))


@dataclass(frozen=True)
class ProblemSpec:
    """A model problem with its manufactured data.

    g is Δu (Poisson) or Δ²u (biharmonic), g1 the Dirichlet data u and g2 the
    Neumann data n̂·∇u.
    """

    kind: Problem
    solution: ManufacturedSolution = field(default_factory=TrigonometricSolution)

    def source(self, x: np.ndarray) -> np.ndarray:
        if self.kind is Problem.POISSON:
            return self.solution.laplacian(x)
        return self.solution.bilaplacian(x)

    def dirichlet(self, x: np.ndarray) -> np.ndarray:
        return self.solution.value(x)

    def neumann(self, x: np.ndarray, normals: np.ndarray) -> np.ndarray:
        return np.einsum("mx,mx->m", self.solution.gradient(x), normals)


# ---------------------------------------------------------------------------
# Operator rows
# ---------------------------------------------------------------------------


def diffusion_matrix_jet(
    patch: Patch, zeta: np.ndarray, order: int
) -> tuple[tuple[tuple[Jet2, Jet2], tuple[Jet2, Jet2]], Jet2]:
    """Jets of N = adj(JF) adj(JF)^T / |det JF| and of |det JF| at parameter points.

    Raises:
        ZeroDivisionError: If det JF vanishes at a point
    """
    geo = GeometryJets.at(patch, np.atleast_2d(zeta), order + 1)
    return geo.diffusion_matrix, geo.determinant.scale(float(geo.orientation))


def poisson_rows(space: SmoothSpace, patch: int, zeta: np.ndarray) -> sp.csr_matrix:
    """Δφ_c at parameter points of a patch, one row per point."""
    geo = GeometryJets.at(space.domain.patches[patch], zeta)
    return space.apply(patch, laplace_operator(geo), zeta)


def biharmonic_rows(space: SmoothSpace, patch: int, zeta: np.ndarray) -> sp.csr_matrix:
    """Δ²φ_c at parameter points of a patch, one row per point."""
    geo = GeometryJets.at(space.domain.patches[patch], zeta)
    return space.apply(patch, biharmonic_operator(geo), zeta)


def boundary_rows(
    space: SmoothSpace,
    patch: int,
    zeta: np.ndarray,
    tag: PointTag,
    side: Side | None = None,
) -> sp.csr_matrix:
    """Dirichlet rows φ_c or Neumann rows n̂·∇φ_c at points of a boundary side.

    Raises:
        SolverError: For interior tags or a Neumann row without a side
    """
    if tag is PointTag.DIRICHLET:
        return space.evaluate(patch, zeta)
    if tag is not PointTag.NEUMANN or side is None:
        raise SolverError(f"no boundary row for tag {tag.value} on side {side}")
    geometry = space.domain.patches[patch]
    normals = geometry.outward_normals(side, zeta)
    geo = GeometryJets.at(geometry, zeta, 1)
    return space.apply(patch, normal_derivative_operator(geo, normals), zeta)


# ---------------------------------------------------------------------------
# Assembly and solve
# ---------------------------------------------------------------------------


class SolveMode(str, Enum):
    SQUARE = "square"
    LEAST_SQUARES = "least_squares"


@dataclass(frozen=True, eq=False)
class CollocationSystem:
    """Collocation matrix with one row per equation and one column per basis function."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    points: tuple[CollocationPoint, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape  # type: ignore[no-any-return]

    @property
    def mode(self) -> SolveMode:
        rows, cols = self.shape
        return SolveMode.SQUARE if rows == cols else SolveMode.LEAST_SQUARES

    def residual(self, coefficients: np.ndarray) -> float:
        """‖Ac - b‖ / ‖b‖, or the absolute residual for b = 0."""
        r = float(np.linalg.norm(self.matrix @ coefficients - self.rhs))
        scale = float(np.linalg.norm(self.rhs))
        return r / scale if scale > 0.0 else r


def assemble_system(
    space: SmoothSpace, points: list[CollocationPoint], spec: ProblemSpec
) -> CollocationSystem:
    """Evaluate every equation for every basis function.

    Rows keep the order of ``points``; points are batched per patch and tag.
    """
    groups: dict[tuple[int, PointTag, Side | None], list[int]] = defaultdict(list)
    for i, point in enumerate(points):
        groups[(point.patch, point.tag, point.side)].append(i)

    rhs = np.empty(len(points))
    blocks: list[sp.csr_matrix] = []
    order: list[int] = []
    for (patch, tag, side), members in groups.items():
        zeta = np.array([points[i].zeta for i in members])
        x = np.array([points[i].point for i in members])
        if tag is PointTag.INTERIOR:
            rows = (poisson_rows if spec.kind is Problem.POISSON else biharmonic_rows)(
                space, patch, zeta
            )
            rhs[members] = spec.source(x)
        elif tag is PointTag.DIRICHLET:
            rows = boundary_rows(space, patch, zeta, tag, side)
            rhs[members] = spec.dirichlet(x)
        else:
            rows = boundary_rows(space, patch, zeta, tag, side)
            normals = space.domain.patches[patch].outward_normals(side, zeta)  # type: ignore[arg-type]
            rhs[members] = spec.neumann(x, normals)
        blocks.append(rows)
        order.extend(members)

    if not blocks:
        raise SolverError("no collocation points to assemble")
    stacked = sp.vstack(blocks).tocsr()
    position = np.empty(len(order), dtype=int)
    position[order] = np.arange(len(order))
    return CollocationSystem(sp.csr_matrix(stacked[position]), rhs, tuple(points))


def numerical_rank(matrix: np.ndarray, tolerance: float) -> int:
    """Rank from column pivoted QR: diagonal entries of R above ``tolerance`` times the first."""
    r = scipy.linalg.qr(matrix, mode="r", pivoting=True)[0]
    diagonal = np.abs(np.diag(r))
    if diagonal.size == 0 or diagonal[0] == 0.0:
        return 0
    return int(np.sum(diagonal > tolerance * diagonal[0]))


def solve_system(system: CollocationSystem, settings: Settings | None = None) -> tuple[np.ndarray, int]:
    """Solve square systems by sparse LU and overdetermined ones by QR least squares.

    Rows are scaled to unit length first, so the rank threshold does not depend
    on the differential order of the equations.

    Returns:
        Coefficients and the numerical rank

    Raises:
        SolverError: If there are fewer equations than unknowns
        RankDeficiencyError: If the matrix is numerically rank deficient
    """
    settings = settings or Settings()
    rows, cols = system.shape
    if rows < cols:
        raise SolverError(f"{rows} equations for {cols} unknowns")
    norms = sparse_norm(system.matrix, axis=1)
    if np.any(norms == 0.0):
        raise RankDeficiencyError(f"{int(np.sum(norms == 0.0))} empty rows in a {rows}x{cols} system")
    scaling = sp.diags(1.0 / norms)
    matrix = scaling @ system.matrix
    rhs = system.rhs / norms

    if system.mode is SolveMode.SQUARE:
        if cols <= settings.rank_audit_max_dim:
            rank = numerical_rank(matrix.toarray(), settings.rank_tolerance)
            if rank < cols:
                raise RankDeficiencyError(
                    f"square collocation matrix {rows}x{cols} has numerical rank {rank} "
                    f"at relative tolerance {settings.rank_tolerance}"
                )
        try:
            lu = splu(sp.csc_matrix(matrix))
        except RuntimeError as e:
            raise RankDeficiencyError(f"singular {rows}x{cols} collocation matrix: {e}") from e
        pivots = np.abs(lu.U.diagonal())
        if pivots.min() <= np.finfo(float).eps * pivots.max():
            raise RankDeficiencyError(
                f"square collocation matrix {rows}x{cols} has a pivot ratio "
                f"{pivots.min() / pivots.max():.3e} at machine precision"
            )
        coefficients = lu.solve(rhs)
        if not np.all(np.isfinite(coefficients)):
            raise RankDeficiencyError(f"singular {rows}x{cols} collocation matrix")
        return coefficients, cols

    coefficients, _, rank, _ = scipy.linalg.lstsq(
        matrix.toarray(), rhs, cond=settings.rank_tolerance, lapack_driver="gelsy"
    )
    if rank < cols:
        raise RankDeficiencyError(
            f"collocation matrix {rows}x{cols} has numerical rank {rank} "
            f"at relative tolerance {settings.rank_tolerance}"
        )
    return coefficients, int(rank)


@dataclass(frozen=True, eq=False)
class SolveResult:
    coefficients: np.ndarray
    system: CollocationSystem
    residual: float
    rank: int


def assemble_and_solve(
    space: SmoothSpace,
    points: list[CollocationPoint],
    spec: ProblemSpec,
    settings: Settings | None = None,
) -> SolveResult:
    """Assemble the collocation system and solve it for the coefficients of u_h."""
    settings = settings or Settings()
    start = time.perf_counter()
    system = assemble_system(space, points, spec)
    coefficients, rank = solve_system(system, settings)
    residual = system.residual(coefficients)
    logger.info(
        "system_solved",
        rows=system.shape[0],
        cols=system.shape[1],
        mode=system.mode.value,
        rank=rank,
        residual=residual,
        seconds=round(time.perf_counter() - start, 3),
    )
    return SolveResult(coefficients, system, residual, rank)


# ---------------------------------------------------------------------------
# Error norms
# ---------------------------------------------------------------------------


def _apply(op: DifferentialOperator, derivatives: dict[tuple[int, int], np.ndarray]) -> np.ndarray:
    return sum(  # type: ignore[return-value]
        coeff * derivatives[key] for key, coeff in op.coefficient_values().items()
    )


def error_norms(
    space: SmoothSpace,
    coefficients: np.ndarray,
    spec: ProblemSpec,
    settings: Settings | None = None,
    quadrature_points: int | None = None,
) -> ErrorReport:
    """Relative errors of u_h in L², H¹ and the Δ, ∇Δ and Δ² seminorm equivalents.

    Integrals are taken per element by tensor Gauss-Legendre quadrature and
    weighted by |det JF|. The ∇Δ and Δ² terms are only computed for s = 4.

    Args:
        space: Space the coefficients refer to
        coefficients: Coefficients of u_h in the basis of ``space``
        spec: Problem carrying the exact solution
        settings: Quadrature settings; defaults from the environment
        quadrature_points: Points per element and direction, overriding settings

    Returns:
        Relative errors, absolute where the exact norm vanishes
    """
    settings = settings or Settings()
    high = space.high
    n2 = high.dimension
    h = space.mesh_size
    q = quadrature_points or settings.quadrature_points(high.degree)
    nodes, weights = legendre.leggauss(q)
    elements = space.k + 1
    max_order = 4 if space.s == 4 else 2

    ys = ((np.arange(elements)[:, None] + (nodes[None, :] + 1.0) / 2.0) * h).ravel()
    wv = np.tile(weights * h / 2.0, elements)
    basis_v = [high.basis_matrix(ys, d) for d in range(max_order + 1)]

    names = ["l2", "h1", "h2"] + (["h3", "h4"] if space.s == 4 else [])
    errors = dict.fromkeys(names, 0.0)
    exact = dict.fromkeys(names, 0.0)
    solution = spec.solution
    for patch in space.domain.patches:
        local = np.asarray(space.patch_matrices[patch.index] @ coefficients).reshape(n2, n2)
        for e in range(elements):
            xs = (e + (nodes + 1.0) / 2.0) * h
            basis_u = [high.basis_matrix(xs, d) for d in range(max_order + 1)]
            zeta = np.column_stack([np.repeat(xs, ys.size), np.tile(ys, xs.size)])
            geo = GeometryJets.at(patch, zeta)
            x = patch(zeta)
            w = np.outer(weights * h / 2.0, wv).ravel() * np.abs(geo.determinant.value)

            ops: dict[str, tuple[DifferentialOperator, ...]] = {
                "h1": gradient_operators(geo),
                "h2": (laplace_operator(geo),),
            }
            if space.s == 4:
                ops["h3"] = laplace_gradient_operators(geo)
                ops["h4"] = (biharmonic_operator(geo),)
            keys = {(0, 0)} | {key for group in ops.values() for op in group for key in op.terms}
            derivatives = {
                (d1, d2): (basis_u[d1] @ local @ basis_v[d2].T).ravel() for d1, d2 in keys
            }
            discrete = {
                name: np.column_stack([_apply(op, derivatives) for op in group])
                for name, group in ops.items()
            }
            pairs: dict[str, tuple[np.ndarray, np.ndarray]] = {
                "l2": (solution.value(x), derivatives[(0, 0)]),
                "h1": (solution.gradient(x), discrete["h1"]),
                "h2": (solution.laplacian(x), discrete["h2"]),
            }
            if space.s == 4:
                pairs["h3"] = (solution.laplacian_gradient(x), discrete["h3"])
                pairs["h4"] = (solution.bilaplacian(x), discrete["h4"])
            for name, (u, uh) in pairs.items():
                diff = np.reshape(u, (w.size, -1)) - np.reshape(uh, (w.size, -1))
                errors[name] += float(w @ np.sum(diff**2, axis=1))
                exact[name] += float(w @ np.sum(np.reshape(u, (w.size, -1)) ** 2, axis=1))
    return ErrorReport.from_sums(errors, exact)


# ---------------------------------------------------------------------------
# Chain-rule oracle
# ---------------------------------------------------------------------------


def _composed_jet(solution: ManufacturedSolution, geo: GeometryJets, x: np.ndarray) -> Jet2:
    """ξ-jet of u∘F from physical derivatives of u and the jets of F."""
    order = geo.fx.order
    batch = geo.batch
    a = geo.fx - Jet2.constant(geo.fx.value, order, batch)
    b = geo.fy - Jet2.constant(geo.fy.value, order, batch)
    one = Jet2.constant(1.0, order, batch)
    powers_a, powers_b = [one], [one]
    for _ in range(order):
        powers_a.append(powers_a[-1] * a)
        powers_b.append(powers_b[-1] * b)
    total = Jet2.constant(0.0, order, batch)
    for i in range(order + 1):
        for j in range(order + 1 - i):
            c = solution.derivative(x, i, j) / (math.factorial(i) * math.factorial(j))
            total = total + (powers_a[i] * powers_b[j]).scale(c)
    return total


def operator_oracle(
    domain: MultiPatchDomain, problem: Problem, samples: int = 100, seed: int = 0
) -> float:
    """Largest relative deviation of the pulled-back operator from a chain-rule oracle.

    A random physical polynomial g is composed with F by jet arithmetic; the
    pulled-back Δ or Δ² applied to g∘F must reproduce Δg or Δ²g.
    """
    rng = np.random.default_rng(seed)
    g = PolynomialSolution.random(5, rng)
    worst = 0.0
    for patch in domain.patches:
        zeta = rng.uniform(0.05, 0.95, size=(max(1, samples // len(domain.patches)), 2))
        geo = GeometryJets.at(patch, zeta)
        x = patch(zeta)
        jet = _composed_jet(g, geo, x)
        if problem is Problem.POISSON:
            op, expected = laplace_operator(geo), g.laplacian(x)
        else:
            op, expected = biharmonic_operator(geo), g.bilaplacian(x)
        got = _apply(op, {key: jet.derivative_value(*key) for key in op.terms})
        scale = max(float(np.abs(expected).max()), 1.0)
        worst = max(worst, float(np.abs(got - expected).max()) / scale)
    logger.debug("operator_oracle_checked", domain=domain.name, problem=problem.value, max_error=worst)
    return worst


# ---------------------------------------------------------------------------
# One full case
# ---------------------------------------------------------------------------


def solve_case(
    domain: MultiPatchDomain,
    problem: Problem,
    scheme: Scheme,
    k: int,
    settings: Settings | None = None,
    quadrature_points: int | None = None,
    check_oracles: bool = False,
    seed: int = 0,
) -> SolveReport:
    """Build W^s, collocate, solve and measure the errors of one mesh."""
    settings = settings or Settings()
    s = problem.smoothness
    spec = ProblemSpec(problem)
    timings: dict[str, float] = {}

    start = time.perf_counter()
    space = build_smooth_space(domain, s, k, settings)
    timings["space"] = time.perf_counter() - start

    start = time.perf_counter()
    points = assemble_global(domain, PointScheme(scheme, s, k), problem, settings, space.dimension)
    timings["points"] = time.perf_counter() - start

    start = time.perf_counter()
    result = assemble_and_solve(space, points, spec, settings)
    timings["solve"] = time.perf_counter() - start

    start = time.perf_counter()
    errors = error_norms(space, result.coefficients, spec, settings, quadrature_points)
    timings["errors"] = time.perf_counter() - start

    oracle = operator_oracle(domain, problem, seed=seed) if check_oracles else None
    return SolveReport(
        domain=domain.name,
        problem=problem.value,
        scheme=scheme.value,
        s=s,
        k=k,
        mesh_size=mesh_label(k),
        dimension=space.dimension,
        rows=result.system.shape[0],
        rank=result.rank,
        residual=result.residual,
        errors=errors,
        timings={name: round(value, 4) for name, value in timings.items()},
        oracle_error=oracle,
    )
