"""Exception types shared across the package."""


class WavedistillError(Exception):
    """Base class for all package errors."""


class InvalidFilterError(WavedistillError, ValueError):
    """Filter taps violate a structural requirement (length, parity)."""


class UnknownBankError(WavedistillError, KeyError):
    """Requested named filter bank does not exist."""


class ShapeError(WavedistillError, ValueError):
    """Array shape incompatible with the requested operation."""


class InvalidArgumentError(WavedistillError, ValueError):
    """Scalar argument outside its legal range."""


class DivergenceError(WavedistillError, RuntimeError):
    """Optimization loss blew up or became non-finite."""

    def __init__(self, step, loss):
        self.step = step
        self.loss = loss
        super().__init__(f"objective diverged at step {step}: total loss {loss}")


class ExperimentPreconditionError(WavedistillError, RuntimeError):
    """An experiment gate (e.g. teacher quality) was not met."""


class ConfigError(WavedistillError, ValueError):
    """CLI configuration file is malformed or has unknown keys."""
