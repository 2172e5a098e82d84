"""Exception hierarchy shared by every module."""


class CoherenceKitError(Exception):
    """Base class for all toolkit errors."""


class NotHermitian(CoherenceKitError):
    pass


class NoConvergence(CoherenceKitError):
    pass


class NegativeEigenvalue(CoherenceKitError):
    pass


class NotAState(CoherenceKitError):
    pass


class NotAnEffect(CoherenceKitError):
    pass


class NotAPovm(CoherenceKitError):
    pass


class DimensionMismatch(CoherenceKitError, ValueError):
    pass


class EmptyInput(CoherenceKitError, ValueError):
    pass


class UnknownMode(CoherenceKitError, KeyError):
    pass


class InvalidDistribution(CoherenceKitError, ValueError):
    pass


class NotCP(CoherenceKitError):
    pass


class NotUnitary(CoherenceKitError):
    pass


class NotTC(CoherenceKitError):
    pass


class ParameterOutOfRange(CoherenceKitError, ValueError):
    pass


class Degenerate(CoherenceKitError):
    pass


class ClassCheckFailed(CoherenceKitError):
    """A sampler produced a channel outside its own class (internal bug guard)."""


class InconsistentVerdicts(CoherenceKitError):
    """Classification verdicts violate TC => DC => IP."""


class NoChannelSupplied(CoherenceKitError):
    pass


class SchemaError(CoherenceKitError, ValueError):
    """A JSON document does not match the expected schema."""
