"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "TipcastError",
    "ParseError",
    "UnboundParameterError",
    "DomainError",
    "BracketNotFound",
    "NoConvergence",
    "SeedEscaped",
    "SeparationFailure",
    "WrongStabilitySign",
    "NonHyperbolicLimit",
    "ApproachToleranceError",
    "ClassificationError",
    "ScenarioError",
    "BisectionError",
    "ConfigError",
]


class TipcastError(Exception):
    """Base class for package errors."""


class ParseError(TipcastError):
    """Expression syntax error, carrying the byte offset of the failure."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        detail = f"{message} (at byte {offset})"
        if text:
            window = text[max(0, offset - 24):offset + 24]
            caret = " " * (offset - max(0, offset - 24)) + "^"
            detail += f"\n  {window}\n  {caret}"
        super().__init__(detail)


class UnboundParameterError(TipcastError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} is not bound")


class DomainError(TipcastError):
    """Field evaluation failed (division by zero, sqrt of a negative, ...)."""

    def __init__(self, message: str, t: float, x: float):
        self.t = t
        self.x = x
        super().__init__(f"{message} at (t, x) = ({t!r}, {x!r})")


class BracketNotFound(TipcastError):
    """No coercivity bracket with the required sign structure was found."""


class NoConvergence(TipcastError):
    """Pullback/pushback seeds did not meet the convergence tolerance."""

    def __init__(self, message: str, final_gap: float):
        self.final_gap = final_gap
        super().__init__(f"{message} (final gap {final_gap:.3e})")


class SeedEscaped(TipcastError):
    """A pullback/pushback seed left the escape bound: outside the basin."""


class SeparationFailure(TipcastError):
    """Computed limit solutions are not uniformly separated."""


class WrongStabilitySign(TipcastError):
    """A limit solution's Lyapunov estimate has the wrong sign."""


class NonHyperbolicLimit(TipcastError):
    """A limit solution's Lyapunov estimate sits below the exponent floor."""


class ApproachToleranceError(TipcastError):
    """Transition field does not meet its limit field at the horizon."""


class ClassificationError(TipcastError):
    """Classification failed structurally (escape direction, underflow...)."""


class ScenarioError(TipcastError):
    """Bad scenario construction (unknown name, missing/extra parameter)."""


class BisectionError(TipcastError):
    """Bisection preconditions violated (same case at both endpoints, ...)."""


class ConfigError(TipcastError):
    """Config document violates the schema; carries the offending path."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{message}" + (f" (at {path})" if path else ""))
