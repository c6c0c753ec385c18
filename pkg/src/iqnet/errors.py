"""Exception types. Every error carries a stable machine-readable ``code``."""

from __future__ import annotations


class IqnetError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


def _make(name: str, code: str, base: type = IqnetError) -> type:
    return type(name, (base,), {"code": code})


class InterferenceError(IqnetError, ValueError):
    code = "INTERFERENCE"


AsymmetricError = _make("AsymmetricError", "ASYMMETRIC", InterferenceError)
NonpositiveCenterError = _make("NonpositiveCenterError", "NONPOSITIVE_CENTER", InterferenceError)
NegativeWeightError = _make("NegativeWeightError", "NEGATIVE_WEIGHT", InterferenceError)
SupercriticalError = _make("SupercriticalError", "SUPERCRITICAL", InterferenceError)
AboveThresholdError = _make("AboveThresholdError", "ABOVE_THRESHOLD", InterferenceError)
DegenerateError = _make("DegenerateError", "DEGENERATE", InterferenceError)
TorusTooSmallError = _make("TorusTooSmallError", "TORUS_TOO_SMALL", InterferenceError)

EmptyWindowError = _make("EmptyWindowError", "EMPTY_WINDOW")
FrozenSiteError = _make("FrozenSiteError", "FROZEN_SITE")
ClockRegressionError = _make("ClockRegressionError", "CLOCK_REGRESSION")
ClusterCapExceededError = _make("ClusterCapExceededError", "CLUSTER_CAP_EXCEEDED")
NotConvergedError = _make("NotConvergedError", "NOT_CONVERGED")
InsufficientBatchesError = _make("InsufficientBatchesError", "INSUFFICIENT_BATCHES")
StepTooLargeError = _make("StepTooLargeError", "STEP_TOO_LARGE")


class OrderingViolationError(IqnetError):
    """Raised when a coupled run breaks a declared coordinate-wise ordering.

    ``trace`` holds the offending event and the two counts.
    """

    code = "ORDERING_VIOLATION"

    def __init__(self, message: str = "", trace: dict | None = None):
        super().__init__(message, trace=trace)
        self.trace = trace or {}


class ConfigError(IqnetError):
    code = "CONFIG"


class ParseError(ConfigError):
    code = "PARSE_ERROR"

    def __init__(self, message: str = "", line: int | None = None, key: str | None = None):
        super().__init__(message, line=line, key=key)
        self.line = line
        self.key = key


class SemanticError(ConfigError):
    code = "SEMANTIC_ERROR"
