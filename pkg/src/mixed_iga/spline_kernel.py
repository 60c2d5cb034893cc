"""Univariate and tensor-product B-spline spaces with open uniform knots.

Knots are kept as exact fractions so that Greville abscissae, point symmetry
and deduplication can be decided exactly; evaluation happens in floating
point through :class:`scipy.interpolate.BSpline` with an identity coefficient
matrix, which yields all basis functions of a space at once.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
import structlog
from scipy.interpolate import BSpline
from scipy.linalg import lu_factor, lu_solve

from .exceptions import ContainmentError, DomainError, ParameterError

logger = structlog.get_logger(__name__)

# relative size below which interpolated spline coefficients are structural zeros
COEFFICIENT_CUTOFF = 1e-13

# slack for parameters produced by floating point arithmetic such as 1 - x
_PARAMETER_SLACK = 1e-12


@dataclass(frozen=True)
class UnivariateSpace:
    """Spline space S^{p,r} on [0,1] with ``k`` uniformly spaced inner knots."""

    degree: int
    regularity: int
    inner_knot_count: int

    def __post_init__(self) -> None:
        if not 0 <= self.regularity < self.degree:
            raise ParameterError(
                f"regularity must satisfy 0 <= r < p, got p={self.degree}, r={self.regularity}"
            )
        if self.inner_knot_count < 0:
            raise ParameterError(f"inner knot count must be >= 0, got {self.inner_knot_count}")

    @property
    def mesh_size(self) -> Fraction:
        """Element length h = 1/(k+1)."""
        return Fraction(1, self.inner_knot_count + 1)

    @property
    def multiplicity(self) -> int:
        """Multiplicity p - r of every inner knot."""
        return self.degree - self.regularity

    @property
    def dimension(self) -> int:
        """Number of B-splines n = p + 1 + k(p - r)."""
        return self.degree + 1 + self.inner_knot_count * self.multiplicity

    @cached_property
    def knots(self) -> tuple[Fraction, ...]:
        """Open uniform knot vector."""
        h = self.mesh_size
        inner = [i * h for i in range(1, self.inner_knot_count + 1) for _ in range(self.multiplicity)]
        ends = self.degree + 1
        return (Fraction(0),) * ends + tuple(inner) + (Fraction(1),) * ends

    @cached_property
    def knot_array(self) -> np.ndarray:
        return np.array([float(t) for t in self.knots])

    @cached_property
    def greville_exact(self) -> tuple[Fraction, ...]:
        """All Greville abscissae as exact fractions."""
        p = self.degree
        t = self.knots
        return tuple(sum(t[j + 1 : j + p + 1], Fraction(0)) / p for j in range(self.dimension))

    @cached_property
    def greville_points(self) -> np.ndarray:
        return np.array([float(z) for z in self.greville_exact])

    @cached_property
    def _splines(self) -> BSpline:
        return BSpline(self.knot_array, np.eye(self.dimension), self.degree)

    def greville(self, j: int) -> Fraction:
        """Greville abscissa (t_{j+1} + ... + t_{j+p}) / p of the j-th B-spline.

        Args:
            j: Basis index

        Returns:
            Exact abscissa

        Raises:
            ParameterError: If the index is out of range
        """
        if not 0 <= j < self.dimension:
            raise ParameterError(f"basis index {j} out of range for dimension {self.dimension}")
        return self.greville_exact[j]

    def contains(self, other: "UnivariateSpace") -> bool:
        """Whether ``other`` is a subspace of this space."""
        return (
            other.inner_knot_count == self.inner_knot_count
            and other.degree <= self.degree
            and other.regularity >= self.regularity
        )

    def basis_matrix(self, xs: np.ndarray | list[float], deriv: int = 0) -> np.ndarray:
        """Evaluate a derivative of every basis function at many parameters.

        Args:
            xs: Parameters in [0, 1]
            deriv: Derivative order

        Returns:
            Dense array of shape (len(xs), dimension)

        Raises:
            DomainError: If a parameter lies outside [0, 1]
        """
        x = np.atleast_1d(np.asarray(xs, dtype=float))
        if x.size and (x.min() < -_PARAMETER_SLACK or x.max() > 1.0 + _PARAMETER_SLACK):
            raise DomainError(f"parameter outside [0, 1]: [{x.min()}, {x.max()}]")
        x = np.clip(x, 0.0, 1.0)
        if deriv > self.degree:
            return np.zeros((x.size, self.dimension))
        values: np.ndarray = self._splines(x, nu=deriv)
        return values.reshape(x.size, self.dimension)

    def eval_basis(self, x: float, max_deriv: int) -> np.ndarray:
        """Evaluate all basis functions and their derivatives at one parameter.

        Args:
            x: Parameter in [0, 1]
            max_deriv: Highest derivative order, at most the degree

        Returns:
            Array of shape (max_deriv + 1, dimension); row d holds N_j^{(d)}(x)
        """
        if not 0 <= max_deriv <= self.degree:
            raise ParameterError(f"derivative order {max_deriv} exceeds degree {self.degree}")
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"parameter {x} outside [0, 1]")
        return np.vstack([self.basis_matrix([x], d) for d in range(max_deriv + 1)])

    def active_start(self, xs: np.ndarray) -> np.ndarray:
        """Index of the first of the p+1 basis functions active at each parameter."""
        span = np.searchsorted(self.knot_array, np.clip(xs, 0.0, 1.0), side="right") - 1
        span = np.clip(span, self.degree, self.dimension - 1)
        return span - self.degree


@dataclass(frozen=True)
class TensorSpace:
    """Tensor-product space spanned by N_{j1}(ξ1) N_{j2}(ξ2)."""

    space_u: UnivariateSpace
    space_v: UnivariateSpace

    @property
    def dimension(self) -> int:
        return self.space_u.dimension * self.space_v.dimension

    @property
    def shape(self) -> tuple[int, int]:
        return self.space_u.dimension, self.space_v.dimension

    def evaluate(self, coefficients: np.ndarray, points: np.ndarray, du: int = 0, dv: int = 0) -> np.ndarray:
        """Evaluate ∂^{(du,dv)} of the spline with a coefficient matrix at points.

        Args:
            coefficients: Array of shape (n_u, n_v), optionally with trailing axes
            points: Array of shape (m, 2)
            du: Derivative order in ξ1
            dv: Derivative order in ξ2

        Returns:
            Values of shape (m,) plus any trailing coefficient axes
        """
        pts = np.atleast_2d(points)
        bu = self.space_u.basis_matrix(pts[:, 0], du)
        bv = self.space_v.basis_matrix(pts[:, 1], dv)
        return np.einsum("mi,ij...,mj->m...", bu, coefficients, bv)

    def rows(self, points: np.ndarray, du: int = 0, dv: int = 0) -> sp.csr_matrix:
        """Sparse evaluation rows: entry (m, i*n_v + j) is ∂^{(du,dv)}N_{i,j} at point m."""
        pts = np.atleast_2d(points)
        return tensor_rows(self.space_u, self.space_v, pts[:, 0], pts[:, 1], du, dv)


@dataclass(frozen=True, eq=False)
class SplineCoeffs1D:
    """A spline given by its coefficients in a univariate space."""

    space: UnivariateSpace
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if np.shape(self.values) != (self.space.dimension,):
            raise ParameterError(
                f"expected {self.space.dimension} coefficients, got shape {np.shape(self.values)}"
            )

    def __call__(self, xs: np.ndarray | list[float], deriv: int = 0) -> np.ndarray:
        return self.space.basis_matrix(xs, deriv) @ self.values


@dataclass(frozen=True, eq=False)
class SplineCoeffs2D:
    """A bivariate spline given by its coefficient matrix in a tensor space."""

    space: TensorSpace
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if np.shape(self.values) != self.space.shape:
            raise ParameterError(
                f"expected coefficient shape {self.space.shape}, got {np.shape(self.values)}"
            )

    def __call__(self, points: np.ndarray, du: int = 0, dv: int = 0) -> np.ndarray:
        return self.space.evaluate(self.values, points, du, dv)


def make_space(p: int, r: int, k: int) -> UnivariateSpace:
    """Create the space S^{p,r} with k uniform inner knots."""
    return UnivariateSpace(degree=p, regularity=r, inner_knot_count=k)


def tensor_rows(
    space_u: UnivariateSpace,
    space_v: UnivariateSpace,
    xs: np.ndarray,
    ys: np.ndarray,
    du: int = 0,
    dv: int = 0,
) -> sp.csr_matrix:
    """Row-wise Kronecker product of two univariate evaluation matrices.

    Only the (p_u+1)(p_v+1) active tensor B-splines per point are stored.
    Columns follow the C-order flattening of an (n_u, n_v) coefficient matrix.
    """
    bu = space_u.basis_matrix(xs, du)
    bv = space_v.basis_matrix(ys, dv)
    m = bu.shape[0]
    wu = space_u.degree + 1
    wv = space_v.degree + 1
    iu = space_u.active_start(np.asarray(xs, dtype=float))[:, None] + np.arange(wu)
    iv = space_v.active_start(np.asarray(ys, dtype=float))[:, None] + np.arange(wv)
    row_index = np.arange(m)[:, None]
    vu = bu[row_index, iu]
    vv = bv[row_index, iv]
    values = (vu[:, :, None] * vv[:, None, :]).reshape(m, -1)
    cols = (iu[:, :, None] * space_v.dimension + iv[:, None, :]).reshape(m, -1)
    rows = np.repeat(np.arange(m), wu * wv)
    return sp.csr_matrix(
        (values.ravel(), (rows, cols.ravel())),
        shape=(m, space_u.dimension * space_v.dimension),
    )


@lru_cache(maxsize=64)
def _greville_lu(space: UnivariateSpace) -> tuple[np.ndarray, np.ndarray]:
    # Greville points satisfy the Schoenberg-Whitney condition for open knots
    return lu_factor(space.basis_matrix(space.greville_points))  # type: ignore[no-any-return]


def interpolate(space: UnivariateSpace, values_at_greville: np.ndarray) -> np.ndarray:
    """Coefficients of the spline interpolating given values at the Greville points.

    Args:
        space: Target space
        values_at_greville: Array of shape (dimension,) or (dimension, m)

    Returns:
        Coefficients with the same shape
    """
    coefficients: np.ndarray = lu_solve(_greville_lu(space), values_at_greville)
    return coefficients


def prune(coefficients: np.ndarray) -> np.ndarray:
    """Zero entries that are rounding noise relative to the largest magnitude."""
    out = np.array(coefficients, dtype=float)
    scale = np.abs(out).max(initial=0.0)
    out[np.abs(out) <= COEFFICIENT_CUTOFF * scale] = 0.0
    return out


@lru_cache(maxsize=64)
def embedding_matrix(source: UnivariateSpace, target: UnivariateSpace) -> np.ndarray:
    """Matrix P with N^{source} = P^T-combination of N^{target}, column j for N^{source}_j.

    Raises:
        ContainmentError: If ``source`` is not a subspace of ``target``
    """
    if not target.contains(source):
        raise ContainmentError(
            f"S^({source.degree},{source.regularity}) is not contained in "
            f"S^({target.degree},{target.regularity}) with k={target.inner_knot_count}"
        )
    if source == target:
        matrix = np.eye(source.dimension)
    else:
        matrix = prune(interpolate(target, source.basis_matrix(target.greville_points)))
    matrix.setflags(write=False)
    logger.debug(
        "embedding_matrix_built",
        source=(source.degree, source.regularity),
        target=(target.degree, target.regularity),
        k=target.inner_knot_count,
    )
    return matrix


def embed(source: UnivariateSpace, target: UnivariateSpace, c: SplineCoeffs1D) -> SplineCoeffs1D:
    """Represent a spline of ``source`` exactly in the larger space ``target``."""
    if c.space != source:
        raise ParameterError("coefficients do not belong to the source space")
    return SplineCoeffs1D(target, embedding_matrix(source, target) @ c.values)


@lru_cache(maxsize=4096)
def _truncated(
    source: UnivariateSpace, target: UnivariateSpace, i: int, left: bool, right: bool
) -> np.ndarray:
    mu = np.array(embedding_matrix(source, target)[:, i])
    strip = target.regularity + 1
    if left:
        mu[:strip] = 0.0
    if right:
        mu[target.dimension - strip :] = 0.0
    floor = -COEFFICIENT_CUTOFF * np.abs(mu).max(initial=0.0)
    if (mu < floor).any():
        raise ContainmentError(
            f"embedding of N_{i} into S^({target.degree},{target.regularity}) has a negative "
            f"coefficient {mu.min():.3e}"
        )
    mu = np.maximum(mu, 0.0)
    mu.setflags(write=False)
    return mu


def truncate(
    i: int,
    source: UnivariateSpace,
    target: UnivariateSpace,
    left: bool = False,
    right: bool = False,
) -> SplineCoeffs1D:
    """Truncated B-spline: N_i of ``source`` in ``target`` with end strips removed.

    The s+1 coefficients nearest each selected end are zeroed, which kills all
    derivatives of order <= s there.

    Args:
        i: Index into ``source`` = S^{s+1,s}
        source: Low-degree space
        target: High-degree space S^{2s+1,s}
        left: Truncate at 0
        right: Truncate at 1

    Returns:
        Coefficients of the truncated function in ``target``
    """
    s = source.regularity
    if source.degree != s + 1 or target.degree != 2 * s + 1 or target.regularity != s:
        raise ParameterError("truncation maps S^{s+1,s} into S^{2s+1,s}")
    if not 0 <= i < source.dimension:
        raise ParameterError(f"basis index {i} out of range for dimension {source.dimension}")
    return SplineCoeffs1D(target, _truncated(source, target, i, left, right))
