"""Exception hierarchy.

Every error raised deliberately by the library derives from
:class:`SplashwaveError` so callers (and the CLI) can separate numerical
failures from programming errors.
"""
from __future__ import annotations


class SplashwaveError(Exception):
    """Base class for library errors."""


# spectral core
class NonOddInput(SplashwaveError):
    pass


class NonZeroMean(SplashwaveError):
    pass


class ParityError(SplashwaveError):
    """Samples declared odd/even violate the parity beyond tolerance."""


# Crapper family
class ParamOutOfRange(SplashwaveError):
    pass


class NoBracket(SplashwaveError):
    pass


class NoRoot(SplashwaveError):
    pass


# geometry
class DivisionByContact(SplashwaveError):
    def __init__(self, alpha: float, beta: float, distance: float):
        super().__init__(
            f"curve points at alpha={alpha:.15g} and beta={beta:.15g} are "
            f"in contact (distance {distance:.3e})"
        )
        self.alpha = alpha
        self.beta = beta
        self.distance = distance


class NotMonotone(SplashwaveError):
    pass


class BadFit(SplashwaveError):
    pass


class WeightNotIntegrable(SplashwaveError):
    pass


class MissingSplashData(SplashwaveError):
    """An operation needs ``alpha_star`` but the curve carries none."""


# operators
class ContactSingularity(SplashwaveError):
    pass


class IllConditioned(SplashwaveError):
    def __init__(self, condition: float):
        super().__init__(f"condition estimate {condition:.3e} exceeds threshold")
        self.condition = condition


class TooCloseToCurve(SplashwaveError):
    pass


# analysis kernels
class NonDecayingData(SplashwaveError):
    pass


class TailBoundTooLarge(SplashwaveError):
    pass


# solver
class BranchAmbiguity(SplashwaveError):
    def __init__(self, alpha: float):
        super().__init__(f"angle reconstruction failed near alpha={alpha:.6g}")
        self.alpha = alpha


class NoConvergence(SplashwaveError):
    def __init__(self, message: str, best_state=None, history=None):
        super().__init__(message)
        self.best_state = best_state
        self.history = history or []


class AdmissibilityLost(SplashwaveError):
    def __init__(self, message: str, state=None, margins=None):
        super().__init__(message)
        self.state = state
        self.margins = margins


# io
class ConfigError(SplashwaveError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.message = message
        self.line = line
        self.field = field


class SchemaMismatch(SplashwaveError):
    def __init__(self, found, expected):
        super().__init__(f"checkpoint schema version {found} does not match expected {expected}")
        self.found = found
        self.expected = expected


class CorruptFile(SplashwaveError):
    pass
