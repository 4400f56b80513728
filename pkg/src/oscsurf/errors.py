"""Exception types shared across the package."""


class OscSurfError(Exception):
    """Base class for all package errors."""


class ConstraintError(OscSurfError):
    """A stated precondition on parameters is violated (e.g. the frequency
    parameter is too small for the box geometry, or a cap is exceeded)."""


class HypothesisError(OscSurfError):
    """A structural hypothesis on the input fields fails on the sample grid
    (e.g. some first partial of the defining function dips to zero)."""


class NoRootError(OscSurfError):
    """The defining function has constant sign along the requested axis
    segment, so the graph chart does not cover this slice point."""


class BandLimitError(OscSurfError):
    """A sampled signal carries too much energy beyond the frequency cap."""


class BoundaryFrequencyError(OscSurfError):
    """The requested frequency sits on a cell boundary, where the associated
    packet is zero by convention."""


class WindowConstructionError(OscSurfError):
    """The numerically computed window transform is not strictly positive on
    the required frequency interval."""


class NonConvergenceError(OscSurfError):
    """Two successive quadrature refinements disagree beyond tolerance."""


class ConfigError(OscSurfError):
    """Malformed experiment configuration."""
