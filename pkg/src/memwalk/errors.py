"""Exception hierarchy shared by all memwalk modules."""


class MemwalkError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(MemwalkError, ValueError):
    """An input violated a documented precondition."""


class DimensionError(PreconditionError):
    """Operand shapes are incompatible."""


class StateError(MemwalkError, RuntimeError):
    """An evolution was asked to step from an unusable state."""


class InvariantViolation(MemwalkError, ArithmeticError):
    """A numerical invariant (trace, norm, positivity...) drifted out of tolerance."""

    def __init__(self, invariant: str, detail: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}")


class ConfigError(MemwalkError, ValueError):
    """Experiment configuration is incomplete or malformed."""

    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"{field}: {detail}")
