"""Exception and warning taxonomy shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; generic ValueError/RuntimeError never escape the public API.
"""

__all__ = [
    "RepsqError",
    "DomainError",
    "InfeasibleRepeatability",
    "InsufficientSamples",
    "DegenerateBatch",
    "ZeroProposalDensity",
    "NonTerminated",
    "ArtifactVersionMismatch",
    "BoundViolation",
    "OracleBudgetError",
    "ClampWarning",
    "WeightCapExceeded",
]


class RepsqError(Exception):
    """Base class for all package errors."""


class DomainError(RepsqError):
    """An argument lies outside its mathematical domain."""


class InfeasibleRepeatability(RepsqError):
    """No quantization width exists for the requested (gamma, c, beta).

    Raised when (1-c)^2 < 1-beta: the accuracy confidence is too weak to
    support the requested repeatability level at any cell width.
    """


class InsufficientSamples(RepsqError):
    """A statistic was requested before enough samples were collected."""


class DegenerateBatch(RepsqError):
    """A batch has too little spread for a moment-based distribution fit."""


class ZeroProposalDensity(RepsqError):
    """The proposal assigns zero density to a point the target supports."""


class NonTerminated(RepsqError):
    """A campaign hit its sample ceiling before the stopping radius fell
    below gamma. The partial state is attached as ``.result``."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ArtifactVersionMismatch(RepsqError):
    """A shared artifact failed its integrity or format-version check."""


class BoundViolation(RepsqError):
    """A sampler cannot honor the declared importance-weight bound."""


class OracleBudgetError(RepsqError):
    """The oracle's standard error is too large to grade accuracy at the
    requested gamma (oracle SE must be <= gamma/10)."""


class ClampWarning(UserWarning):
    """A raw estimate left the measure interval and was clamped."""


class WeightCapExceeded(UserWarning):
    """An observed importance weight exceeded the declared cap.

    Diagnostic only: the campaign continues, the count is reported.
    """
