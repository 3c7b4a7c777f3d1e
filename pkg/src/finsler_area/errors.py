"""Exception types shared across the package."""


class FinslerError(Exception):
    """Base class for all errors raised by this package."""


class ZeroDirection(FinslerError):
    """A direction argument was the zero vector."""


class ParamOutOfRange(FinslerError):
    """Metric parameters leave the validity range of the closed form."""


class NumericalBreakdown(FinslerError):
    """A finite-difference or quadrature consistency check failed."""


class NoTransition(FinslerError):
    """A threshold scan found no verdict change over the interval."""


class NonPositiveDenominator(FinslerError):
    """A transform value that must be positive was not."""


class OddInput(FinslerError):
    """An even function was required but the input has odd energy."""


class NonPositive(FinslerError):
    """A constructed quantity that must stay positive touched zero."""


class DegenerateCell(FinslerError):
    """A surface cell has a vanishing tangent cross product."""


class DegenerateSegment(FinslerError):
    """A curve segment has coincident endpoints."""


class XDependentDistance(FinslerError):
    """Straight-line distance requested for a position-dependent metric."""


class MeshDegenerate(FinslerError):
    """A mesh triangle has non-positive area or the mesh is non-conforming."""


class NonConvergence(FinslerError):
    """An iterative solver exhausted its iteration budget."""


class EllipticityLost(FinslerError):
    """The energy Hessian turned indefinite during a solve."""


class DegreeTruncation(UserWarning):
    """Harmonic band limit absorbs a non-negligible share of the energy."""
