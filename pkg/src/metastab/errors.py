"""Exception types shared across the package.

Every failure mode that callers are expected to catch has its own class;
plain ValueError/TypeError are reserved for programming errors.
"""


class MetastabError(Exception):
    """Base class for all package-specific errors."""


# --- expression parsing / evaluation ---

class PotentialSyntaxError(MetastabError):
    def __init__(self, position, expected, message=None):
        self.position = position
        self.expected = tuple(sorted(expected))
        super().__init__(
            message or "syntax error at position %d, expected one of %s"
            % (position, ", ".join(self.expected))
        )


class UnknownIdentifier(MetastabError):
    pass


class DimensionMismatch(MetastabError):
    pass


class DomainError(MetastabError):
    pass


class NonFinite(MetastabError):
    pass


# --- landscape analysis ---

class DegenerateCriticalPoint(MetastabError):
    pass


class NoConvergence(MetastabError):
    pass


class FlowDiverged(MetastabError):
    pass


class StagnatedAtSaddle(MetastabError):
    pass


class SaddleRefinementFailed(MetastabError):
    pass


class NonUniqueSaddle(Warning):
    """Two index-1 candidates within height tolerance; the graph is still built."""


# --- measures / quadrature ---

class QuadratureUnderResolved(MetastabError):
    pass


class EpsilonTooLarge(Warning):
    """Truncation radius below sqrt(n); the tail expansion regime fails."""


# --- Eyring-Kramers evaluation ---

class MissingSaddle(MetastabError):
    pass


class NotTwoWells(MetastabError):
    pass


# --- transport ---

class PathSelfIntersecting(MetastabError):
    pass


class SaddleTangentMismatch(MetastabError):
    pass


class NotSPD(MetastabError):
    pass


class NotOrthogonal(MetastabError):
    pass


class Singular(MetastabError):
    pass


# --- Lyapunov ---

class DeltaInfeasible(MetastabError):
    pass


class DriftViolated(MetastabError):
    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points if points is not None else []


# --- scalar analysis / discrete inequalities ---

class NonPositive(MetastabError):
    pass


class NonPositiveArgument(MetastabError):
    pass


class OutOfRange(MetastabError):
    pass


class NegativeFunction(MetastabError):
    pass


# --- 1D oracles ---

class EigensolveFailed(MetastabError):
    pass


class GridTooCoarse(MetastabError):
    pass


class StepSizeTooLarge(MetastabError):
    pass


class Escape(MetastabError):
    pass
