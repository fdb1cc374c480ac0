class PolyinvError(Exception):
    """Base class for all errors raised by polyinv."""


class LPError(PolyinvError):
    """The linear-programming oracle broke down numerically."""


class DimensionError(PolyinvError, ValueError):
    pass


class EmptySetError(PolyinvError, ValueError):
    """An operation that needs a nonempty set received an empty one."""


class UnboundedSetError(PolyinvError, ValueError):
    pass


class UnsupportedActivationError(PolyinvError, ValueError):
    """The activation is not allowed on this code path (e.g. sigmoid in exact propagation)."""


class FormatError(PolyinvError, ValueError):
    """Malformed network or set description."""
