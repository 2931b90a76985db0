"""
Exception hierarchy for nehari-bif.

Library code raises these; only the CLI maps them to exit codes.
"""

from typing import Any, Optional


class NehariError(Exception):
    """Base class for all nehari-bif errors."""

    exit_code = 1


class ValidationError(NehariError):
    """Invalid input: exponents, model parameters or configuration."""

    exit_code = 2


class InvalidExponentError(ValidationError):
    """The exponent triple violates 1 < p < q < gamma (hypothesis H)."""


class InvalidModelError(ValidationError):
    """An operation was called with the wrong model variant."""


class ConfigError(ValidationError):
    """Configuration could not be read or parsed."""

    def __init__(self, message: str, path: Optional[str] = None, lineno: Optional[int] = None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        super().__init__(f"{where}{message}")


class MissingExtremalError(ValidationError):
    """An operation needs an extremal report that was not supplied."""


class FiberOverflowError(ValidationError):
    """Fiber arithmetic produced a non-finite value."""


class ModelEvaluationError(ValidationError):
    """A model functional evaluated to a non-finite value."""


class HypothesisViolationError(NehariError):
    """A structural hypothesis failed on a sampled field."""

    exit_code = 4

    def __init__(self, hypothesis: str, message: str):
        self.hypothesis = hypothesis
        super().__init__(f"hypothesis {hypothesis} violated: {message}")


class VerificationError(NehariError):
    """A computed solution failed a certification check."""

    exit_code = 4

    def __init__(self, check: str, message: str):
        self.check = check
        super().__init__(f"verification '{check}' failed: {message}")


class ProjectionError(NehariError):
    """A ray cannot be projected onto the requested Nehari branch."""

    exit_code = 3


class NoProjectionError(ProjectionError):
    """The fiber along the ray has no critical point (case III)."""


class DegenerateDirectionError(ProjectionError):
    """The fiber along the ray has a degenerate critical point (case II)."""


class NonConvergenceError(NehariError):
    """No restart met the convergence criterion; `best` holds the best attempt."""

    exit_code = 3

    def __init__(self, message: str, best: Any = None):
        self.best = best
        super().__init__(message)


class EmptyBranchError(NehariError):
    """No sampled ray could be projected onto the branch."""

    exit_code = 3


class ContinuationError(NehariError):
    """Branch continuation lost convergence too early."""

    exit_code = 3
