"""Exception and warning types raised across the package."""


class WGMError(Exception):
    """Base class for all package errors."""

    code = "E_GENERIC"


class ParameterError(WGMError, ValueError):
    code = "E_PARAM"


class NonFiniteParameter(ParameterError):
    code = "E_NONFINITE"


class NegativeRate(ParameterError):
    code = "E_NEGATIVE_RATE"


class PreconditionViolated(WGMError, ValueError):
    code = "E_PRECONDITION"


class DegenerateDenominator(WGMError, ZeroDivisionError):
    code = "E_DEGENERATE_DENOMINATOR"


class DegenerateCubic(WGMError):
    code = "E_DEGENERATE_CUBIC"


class UndefinedPhase(WGMError, ValueError):
    code = "E_UNDEFINED_PHASE"


class GridTooCoarse(WGMError):
    code = "E_GRID_TOO_COARSE"


class UndefinedRatio(WGMError):
    code = "E_UNDEFINED_RATIO"


class StepTooLarge(WGMError):
    code = "E_STEP_TOO_LARGE"


class NotSettled(WGMError):
    code = "E_NOT_SETTLED"


class NoConvergence(WGMError):
    code = "E_NO_CONVERGENCE"


class Underdetermined(WGMError, ValueError):
    code = "E_UNDERDETERMINED"


class ParseError(WGMError, ValueError):
    code = "E_PARSE"


class UnitMissing(WGMError, ValueError):
    code = "E_UNIT_MISSING"


class ConfigError(WGMError, ValueError):
    code = "E_CONFIG"


class TrackingAmbiguity(UserWarning):
    """Two consecutive pole sets could not be matched within the gap tolerance."""
