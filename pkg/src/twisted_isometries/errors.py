"""Exception hierarchy shared by all modules."""


class TwistedIsometryError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(TwistedIsometryError, ValueError):
    pass


class DimensionError(TwistedIsometryError, ValueError):
    pass


class ContainmentError(TwistedIsometryError, ValueError):
    pass


class RankError(TwistedIsometryError, ValueError):
    pass


class TruncationError(TwistedIsometryError, ValueError):
    """The lattice truncation is too small for the requested computation."""


class InvariantViolation(TwistedIsometryError, ValueError):
    """An operator or tuple fails a structural invariant (unitarity, commutation)."""


class ConstructionError(InvariantViolation):
    pass


class ClosureError(TwistedIsometryError):
    """A composition leaves the monomial operator class."""


class UnsupportedError(TwistedIsometryError):
    pass


class InconsistencyError(TwistedIsometryError):
    """Decomposition certificates failed; the input is not a twisted isometry."""


class PreconditionError(TwistedIsometryError, ValueError):
    pass


class NotReducingError(PreconditionError):
    pass


class WordSyntaxError(TwistedIsometryError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at token {position})")
        self.position = position
