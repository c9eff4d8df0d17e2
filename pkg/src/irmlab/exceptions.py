"""Exception hierarchy for the simulation lab.

Every error raised by library code derives from IrmLabError so callers (and
the CLI exit-code mapping) can distinguish our failures from programming
errors. Subclasses mark the three CLI categories: validation (bad config or
domain input), arithmetic, and runtime/regression failures.
"""


class IrmLabError(Exception):
    """Base class for all lab errors."""


class ValidationError(IrmLabError):
    """A config file, scenario spec, or parameter set failed validation."""


class DomainError(ValidationError):
    """An operand is outside an operation's documented domain."""


class ArithmeticOverflow(IrmLabError):
    """A fixed-point result left the representable raw-integer range."""


class DecimalDivisionByZero(IrmLabError):
    """Division by a zero fixed-point value."""


class ClockRegression(IrmLabError):
    """An update was submitted with a timestamp earlier than stored state."""


class InfeasibleAnchor(ValidationError):
    """Curve-shape solving was asked for an unreachable anchor point."""


class StepError(IrmLabError):
    """A strategy or scenario error, annotated with the failing step index."""

    def __init__(self, step: int, strategy: str, cause: Exception):
        self.step = step
        self.strategy = strategy
        super().__init__(f"step {step} ({strategy}): {cause}")


class ReplayMismatch(IrmLabError):
    """A recorded trace diverged from re-execution."""

    def __init__(self, step: int, field: str, expected: str, actual: str):
        self.step = step
        self.field = field
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"trace diverges at step {step}, field {field!r}: "
            f"recorded {expected}, re-executed {actual}"
        )


class CalibrationError(ValidationError):
    """The calibration grid or target set is unusable."""
