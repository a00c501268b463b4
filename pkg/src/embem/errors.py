"""Exception hierarchy shared across the package."""


class EmbemError(Exception):
    """Base class for all package errors."""


class ParseError(EmbemError):
    """A mesh file could not be parsed in the declared format."""


class TopologyError(EmbemError):
    """A surface mesh is open, non-manifold or otherwise unusable."""


class InvalidParameter(EmbemError):
    """A numeric argument violates its precondition."""


class IntersectionError(EmbemError):
    """A placement makes two particle surfaces intersect."""


class OutOfSupport(EmbemError):
    """A basis function was evaluated on an element outside its support."""


class UnsupportedOrder(EmbemError):
    """Requested quadrature order is outside the supported set."""


class AssemblyError(EmbemError):
    """Operator assembly produced a non-finite entry."""


class SingularMass(EmbemError):
    """A twisted mass block is numerically singular."""


class SpaceMismatch(EmbemError):
    """Two function spaces do not live on the same scatterer boundary."""


class CoincidentPoints(EmbemError):
    """The Green's function was evaluated at x == y."""


class PointTooClose(EmbemError):
    """A potential was requested too close to the surface."""


class TruncationFailure(EmbemError):
    """Mie coefficients failed to decay below threshold."""


class ScenarioError(EmbemError):
    """A scenario file is malformed or violates a physical invariant."""
