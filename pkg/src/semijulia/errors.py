"""Exception hierarchy shared by every module."""


class SemiJuliaError(Exception):
    """Base class for all library errors."""


class NonConvergence(SemiJuliaError):
    """Root finding or a fixed-point sweep did not converge within budget."""


class CompositionTooLarge(SemiJuliaError):
    """A composed polynomial would exceed the configured degree cap."""


class NoRepellingFixedPoint(SemiJuliaError):
    pass


class InvalidBase(SemiJuliaError):
    """The base point for a partner construction is not admissible."""


class BisectionFailed(SemiJuliaError):
    pass


class BracketInvalid(SemiJuliaError):
    """A bisection bracket does not enclose a sign change."""


class OrbitEscaped(SemiJuliaError):
    """A forward orbit expected to stay bounded left the escape disk."""


class SeriesNotDecaying(SemiJuliaError):
    pass


class DegenerateFit(SemiJuliaError):
    """A log-log regression has too few usable scales."""


class PreimageNearCritical(SemiJuliaError):
    """A preimage has (numerically) vanishing derivative norm."""
