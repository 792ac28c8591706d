"""Exception hierarchy shared by every layer of the package."""


class BFVError(Exception):
    """Base class for all errors raised by :mod:`bfv`."""


class ParseError(BFVError, ValueError):
    pass


class UnknownVariableError(BFVError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown variable"


class DegreeCapError(BFVError, ArithmeticError):
    """A polynomial exceeded the configured total-degree cap."""


class ContextMismatchError(BFVError, ValueError):
    """Operands belong to different variable tables or fiber ranks."""


class BidegreeError(BFVError, ValueError):
    """An element does not have the bidegree (or total degree) an operation needs."""


class NotCertifiableError(BFVError, ValueError):
    """Invertibility of an endomorphism field cannot be certified on polynomial data."""


class OrientationError(BFVError, ValueError):
    """A constant determinant is negative, so the field is not in GL+."""


class WitnessRequiredError(BFVError, ValueError):
    pass


class NilpotencyError(BFVError, ArithmeticError):
    """Dyson series did not terminate within the iteration cap."""


class IterationBoundError(BFVError, RuntimeError):
    """Perturbation loop ran past its theoretical bound (a sign bug, not a math failure)."""


class EndpointMismatchError(BFVError, ValueError):
    pass


class FamilyMismatchError(BFVError, ValueError):
    pass


class NotCoisotropicError(BFVError, ValueError):
    """Raised when a lift is requested for a non-coisotropic section.

    The offending witness is attached as ``.witness``.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FlowBlowupError(BFVError, FloatingPointError):
    pass


class SchemaError(BFVError, ValueError):
    pass
