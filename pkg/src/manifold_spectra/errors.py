"""
Exceptions raised by ``manifold_spectra``.

Argument problems subclass `ValueError`, numerical failures subclass
`RuntimeError`, so callers that only care about the broad category can keep
catching the builtins.
"""

__all__ = [
    "DomainError",
    "InvalidDensityBoundError",
    "ConnectivityError",
    "RadiusTooSmallError",
    "RegimeError",
    "ConfigError",
    "OracleNotConvergedError",
    "QuadratureTooCoarseError",
]


class DomainError(ValueError):
    """A point does not lie on the manifold it is used with."""


class InvalidDensityBoundError(ValueError):
    """The bound ``alpha`` of a density is not a valid rejection envelope."""


class ConnectivityError(ValueError):
    """
    A normalized Laplacian was requested on a graph with isolated vertices.

    Attributes
    ----------
    vertices : list of int
        Indices of the vertices with zero degree.
    """

    def __init__(self, vertices: list[int]):
        self.vertices = list(vertices)
        shown = ", ".join(str(v) for v in self.vertices[:20])
        if len(self.vertices) > 20:
            shown += ", ..."
        super().__init__(
            f"{len(self.vertices)} vertices have zero degree: {shown}"
        )


class RadiusTooSmallError(ValueError):
    """The smoothing radius leaves an evaluation point without neighbours."""

    def __init__(self, point: int, radius: float):
        self.point = point
        self.radius = radius
        super().__init__(
            f"theta vanishes at quadrature point {point} for radius "
            f"{radius:.6g}; increase the radius or the quadrature size"
        )


class RegimeError(ValueError):
    """The bandwidth is too small compared to the transport distance."""


class ConfigError(ValueError):
    """A study configuration value is missing or invalid."""


class OracleNotConvergedError(RuntimeError):
    """The Fourier-Galerkin eigenvalues did not settle under cutoff doubling."""


class QuadratureTooCoarseError(RuntimeError):
    """The quadrature cloud cannot resolve an eigenspace basis."""
