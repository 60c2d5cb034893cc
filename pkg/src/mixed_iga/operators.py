"""Physical differential operators pulled back to patch parameters.

An operator is a finite sum Σ c_{d1,d2}(ξ) ∂_ξ^{(d1,d2)} whose coefficients are
carried as :class:`~mixed_iga.jets.Jet2` expansions, so operators can be
composed by the Leibniz rule without symbolic algebra.
"""

from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .exceptions import ParameterError
from .geometry import Patch
from .jets import Jet2

# jet order of F sufficient for every operator up to fourth order
GEOMETRY_JET_ORDER = 4


@dataclass(frozen=True, eq=False)
class DifferentialOperator:
    """Σ c_d ∂^d with jet-valued coefficients over a batch of points."""

    terms: dict[tuple[int, int], Jet2]

    @property
    def degree(self) -> int:
        return max((d1 + d2 for d1, d2 in self.terms), default=0)

    @property
    def jet_order(self) -> int:
        return min((c.order for c in self.terms.values()), default=0)

    def __add__(self, other: "DifferentialOperator") -> "DifferentialOperator":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out[key] + c if key in out else c
        return DifferentialOperator(out)

    def scale(self, factor: float | np.ndarray) -> "DifferentialOperator":
        return DifferentialOperator({key: c.scale(factor) for key, c in self.terms.items()})

    def compose(self, inner: "DifferentialOperator") -> "DifferentialOperator":
        """The operator u -> self(inner(u)).

        Raises:
            ParameterError: If the coefficient jets of ``inner`` are too short
        """
        if inner.jet_order < self.degree:
            raise ParameterError(
                f"composition needs inner coefficient jets of order {self.degree}, "
                f"got {inner.jet_order}"
            )
        out: dict[tuple[int, int], Jet2] = {}
        for (d1, d2), a in self.terms.items():
            for (e1, e2), b in inner.terms.items():
                for f1 in range(d1 + 1):
                    for f2 in range(d2 + 1):
                        term = (a * b.partial(f1, f2)).scale(comb(d1, f1) * comb(d2, f2))
                        key = (d1 - f1 + e1, d2 - f2 + e2)
                        out[key] = out[key] + term if key in out else term
        return DifferentialOperator(out)

    def coefficient_values(self) -> dict[tuple[int, int], np.ndarray]:
        """Coefficient values at the expansion points."""
        return {key: c.value for key, c in self.terms.items()}


@dataclass(frozen=True, eq=False)
class GeometryJets:
    """Jets of a patch mapping and its derived metric quantities at a point batch."""

    fx: Jet2
    fy: Jet2
    orientation: int

    @classmethod
    def at(cls, patch: Patch, points: np.ndarray, order: int = GEOMETRY_JET_ORDER) -> "GeometryJets":
        derivatives = patch.jet(points, order)
        return cls(
            Jet2.from_derivatives(derivatives[..., 0], order),
            Jet2.from_derivatives(derivatives[..., 1], order),
            patch.orientation,
        )

    @property
    def batch(self) -> tuple[int, ...]:
        return self.fx.coefficients.shape[2:]

    @cached_property
    def jacobian(self) -> tuple[tuple[Jet2, Jet2], tuple[Jet2, Jet2]]:
        """J[a][b] = ∂_b F_a."""
        return (
            (self.fx.derivative(0), self.fx.derivative(1)),
            (self.fy.derivative(0), self.fy.derivative(1)),
        )

    @cached_property
    def adjugate(self) -> tuple[tuple[Jet2, Jet2], tuple[Jet2, Jet2]]:
        (j11, j12), (j21, j22) = self.jacobian
        return ((j22, -j12), (-j21, j11))

    @cached_property
    def determinant(self) -> Jet2:
        (j11, j12), (j21, j22) = self.jacobian
        return j11 * j22 - j12 * j21

    @cached_property
    def inverse_abs_determinant(self) -> Jet2:
        return self.determinant.scale(float(self.orientation)).reciprocal()

    @cached_property
    def inverse_jacobian(self) -> tuple[tuple[Jet2, Jet2], tuple[Jet2, Jet2]]:
        inv_det = self.inverse_abs_determinant.scale(float(self.orientation))
        adj = self.adjugate
        return (
            (adj[0][0] * inv_det, adj[0][1] * inv_det),
            (adj[1][0] * inv_det, adj[1][1] * inv_det),
        )

    @cached_property
    def diffusion_matrix(self) -> tuple[tuple[Jet2, Jet2], tuple[Jet2, Jet2]]:
        """N = adj(J) adj(J)^T / |det J|, symmetric positive definite."""
        adj = self.adjugate
        inv = self.inverse_abs_determinant
        return tuple(  # type: ignore[return-value]
            tuple((adj[a][0] * adj[b][0] + adj[a][1] * adj[b][1]) * inv for b in (0, 1))
            for a in (0, 1)
        )

    def identity_term(self, d1: int, d2: int) -> DifferentialOperator:
        return DifferentialOperator(
            {(d1, d2): Jet2.constant(1.0, self.fx.order, self.batch)}
        )


def gradient_operators(geo: GeometryJets) -> tuple[DifferentialOperator, DifferentialOperator]:
    """∂/∂x1 and ∂/∂x2 as parametric operators: ∂_{x_a} = Σ_b (J^{-1})_{ba} ∂_b."""
    inv = geo.inverse_jacobian
    return tuple(  # type: ignore[return-value]
        DifferentialOperator({(1, 0): inv[0][a], (0, 1): inv[1][a]}) for a in (0, 1)
    )


def laplace_operator(geo: GeometryJets) -> DifferentialOperator:
    """Δ_x = |det J|^{-1} ∇_ξ · (N ∇_ξ)."""
    n = geo.diffusion_matrix
    inv = geo.inverse_abs_determinant
    return DifferentialOperator(
        {
            (2, 0): n[0][0] * inv,
            (0, 2): n[1][1] * inv,
            (1, 1): (n[0][1] + n[1][0]) * inv,
            (1, 0): (n[0][0].derivative(0) + n[1][0].derivative(1)) * inv,
            (0, 1): (n[0][1].derivative(0) + n[1][1].derivative(1)) * inv,
        }
    )


def biharmonic_operator(geo: GeometryJets) -> DifferentialOperator:
    laplace = laplace_operator(geo)
    return laplace.compose(laplace)


def laplace_gradient_operators(
    geo: GeometryJets,
) -> tuple[DifferentialOperator, DifferentialOperator]:
    """∂_{x_a} Δ_x for a = 1, 2."""
    laplace = laplace_operator(geo)
    return tuple(g.compose(laplace) for g in gradient_operators(geo))  # type: ignore[return-value]


def physical_derivative(geo: GeometryJets, a: int, b: int) -> DifferentialOperator:
    """∂_{x1}^a ∂_{x2}^b as a parametric operator."""
    dx1, dx2 = gradient_operators(geo)
    out = geo.identity_term(0, 0)
    for op in [dx2] * b + [dx1] * a:
        out = op.compose(out)
    return out


def normal_derivative_operator(geo: GeometryJets, normals: np.ndarray) -> DifferentialOperator:
    """n̂ · ∇_x for unit normals given per point, shape (m, 2)."""
    dx1, dx2 = gradient_operators(geo)
    return dx1.scale(normals[:, 0]) + dx2.scale(normals[:, 1])
