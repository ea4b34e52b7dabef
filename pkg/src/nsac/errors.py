"""Exception hierarchy.

Every failure the simulator can report derives from :class:`NsacError`.  The
CLI maps the three families below onto process exit codes:

* :class:`ValidationError` and friends (bad input) -> 2
* :class:`PhysicsError` subclasses (the run left its admissible regime) -> 3
* :class:`FormatError` and ``OSError`` (persistence) -> 4
"""


class NsacError(Exception):
    """Base class for all simulator errors."""


class InputError(NsacError, ValueError):
    """An argument violates a documented precondition."""


class InvalidGrid(InputError):
    pass


class GridMismatch(InputError):
    pass


class ZeroModeUndefined(InputError):
    """A negative-order multiplier was applied to a field with nonzero mean."""


class InvalidExponents(InputError):
    pass


class InvalidRange(InputError):
    pass


class InvalidCut(InputError):
    pass


class DegenerateSeries(InputError):
    pass


class ParseError(InputError):
    pass


class ValidationError(InputError):
    pass


class PhysicsError(NsacError):
    """The state left the regime where the model is integrated."""


class NonFiniteData(PhysicsError):
    pass


class VacuumViolation(PhysicsError):
    pass


class CflViolation(PhysicsError):
    pass


class FormatError(NsacError):
    """A checkpoint file is malformed or has an unsupported version."""
