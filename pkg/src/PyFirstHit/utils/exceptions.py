# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : exceptions.py
@Description: 统一的异常类型。 Validation errors map to CLI exit code 1, runtime errors to exit code 2.
@Version    : v0.1.0
"""
from typing import Any, Optional


class FirstHitError(Exception):
    """Base class of every error raised by PyFirstHit."""


class ValidationError(FirstHitError, ValueError):
    """Invalid user input: arguments, descriptors, config values or files."""


class PreconditionError(ValidationError):
    """An operation was called outside its precondition."""


class SingularInputError(ValidationError):
    """A closed-form density or score was evaluated at a singular point."""


class ConfigurationError(ValidationError):
    """Configuration values that cannot produce a valid run."""


class ParseError(ValidationError):
    """
    A malformed input file.

    Attributes:
        line (Optional[int]): 1-based line number of the offending line, when known.
    """

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(ParseError):
    """A file whose magic line or header does not match the expected format."""


class SimulationError(FirstHitError, RuntimeError):
    """
    Numerical failure while simulating a process.

    Attributes:
        t (Optional[float]): diffusion time at which the failure was detected.
        state (Any): the offending state (or batch of states).
        index (Optional[int]): trajectory index, attached by batch simulation.
    """

    def __init__(self, message: str, t: Optional[float] = None, state: Any = None,
                 index: Optional[int] = None) -> None:
        self.t = t
        self.state = state
        self.index = index
        super().__init__(message)

    def with_index(self, index: int) -> "SimulationError":
        self.index = index
        self.args = (f"trajectory {index}: {self.args[0]}",)
        return self


class DegenerateEstimateError(SimulationError):
    """All Monte Carlo weights vanished, the estimate is undefined."""
