"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`AsxError`,
which lets the CLI map failures onto exit codes without catching unrelated
Python errors.
"""


class AsxError(Exception):
    """Base class for library errors."""

    code = "asx_error"


class PoleError(AsxError, ValueError):
    code = "pole"


class DomainError(AsxError, ValueError):
    code = "domain"


class RangeError(AsxError, IndexError):
    """Raised when a coefficient sequence is too short for the request."""

    code = "range"


class DegenerateRootsError(AsxError, ValueError):
    code = "degenerate_roots"


class NotCanonicalError(AsxError, ValueError):
    code = "not_canonical"


class InvariantError(AsxError, ValueError):
    """A problem definition violates one of its structural hypotheses."""

    code = "invariant"


class PreconditionError(AsxError, ValueError):
    code = "precondition"


class DivergentFitError(AsxError, ArithmeticError):
    code = "divergent_fit"


class IllConditionedError(AsxError, ArithmeticError):
    code = "ill_conditioned"


class TooSmallError(AsxError, ValueError):
    code = "too_small"


class BranchError(AsxError, ValueError):
    code = "branch"


class PrecisionError(AsxError, ArithmeticError):
    code = "precision"


class NonConvergenceError(AsxError, ArithmeticError):
    code = "non_convergence"


class PoleOnRayError(AsxError, ValueError):
    code = "pole_on_ray"


class SchemaError(AsxError, ValueError):
    """Malformed problem file. ``pointer`` is a JSON pointer to the bad field."""

    code = "schema"

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer
