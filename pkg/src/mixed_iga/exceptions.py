"""Custom exceptions for Mixed IGA."""


class MixedIgaError(Exception):
    """Base exception for all Mixed IGA errors."""


class ConfigurationError(MixedIgaError):
    """Raised when a run configuration is invalid or inconsistent."""


class ParameterError(MixedIgaError):
    """Raised when spline or space parameters are out of range."""


class DomainError(MixedIgaError):
    """Raised when an evaluation point lies outside the parameter domain."""


class ContainmentError(MixedIgaError):
    """Raised when two spline spaces are not nested."""


class GeometryError(MixedIgaError):
    """Raised when a multi-patch geometry is unusable."""


class RegularityError(GeometryError):
    """Raised when a geometry mapping is singular or folded."""


class OrientationError(GeometryError):
    """Raised when an inner edge cannot be oriented consistently."""


class GluingError(GeometryError):
    """Raised when an inner edge is not bilinear-like G^s."""


class TopologyError(GeometryError):
    """Raised when edges or vertex fans are inconsistent."""


class GeometryFileError(GeometryError):
    """Raised when a geometry file violates the schema."""


class UnsupportedDomainError(GeometryError):
    """Raised when a built-in domain cannot be constructed."""


class SpaceConstructionError(MixedIgaError):
    """Raised when the smooth space cannot be built."""


class KernelRankError(SpaceConstructionError):
    """Raised when the numerical rank of a vertex constraint system is ambiguous."""


class CollocationError(MixedIgaError):
    """Raised when a collocation point set cannot be generated."""


class SolverError(MixedIgaError):
    """Raised when assembly or the linear solve fails."""


class RankDeficiencyError(SolverError):
    """Raised when the collocation matrix is numerically rank deficient."""
