"""Exception types raised across the package."""


class Mole2DError(Exception):
    """Base class for every error raised by mole2d."""


class GraphError(Mole2DError, ValueError):
    pass


class Disconnected(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class NonpositiveVariance(GraphError):
    pass


class OdometricPathMissing(GraphError):
    pass


class NonFinite(Mole2DError, ValueError):
    pass


class OutOfRange(Mole2DError, ValueError):
    pass


class SingularBlock(Mole2DError, ArithmeticError):
    pass


class NotPositiveDefinite(Mole2DError, ArithmeticError):
    pass


class CanonicalizationFailure(Mole2DError, ArithmeticError):
    pass


class BudgetExceeded(Mole2DError, RuntimeError):
    pass


class CapExceeded(Mole2DError, RuntimeError):
    """Raised when the confidence set is larger than the hypothesis cap.

    The screening result computed so far is kept on ``hypotheses`` so callers
    can still report diagnostics.
    """

    def __init__(self, message, hypotheses=None):
        super().__init__(message)
        self.hypotheses = hypotheses


class FormatError(Mole2DError, ValueError):
    pass


class MalformedLine(FormatError):
    def __init__(self, lineno, line, reason="malformed line"):
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")
        self.lineno = lineno


class NonpositiveInformation(FormatError):
    pass
