"""Exception types raised across the package."""


class FLRError(Exception):
    """Base class for all package errors."""


class DomainError(FLRError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(FLRError, ValueError):
    """Array shapes, grids or node sets do not match."""


class CapacityError(FLRError, ValueError):
    """A request exceeds a precomputed table's capacity."""


class NumericError(FLRError, ArithmeticError):
    """A numerical routine failed or produced an invalid result."""


class IllConditionedError(NumericError):
    """A matrix is too close to singular for the requested inversion."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number

    def __reduce__(self):
        return type(self), (self.args[0], self.condition_number)


class IllPosedError(NumericError):
    """An inverse power was requested for data mostly outside the retained span."""

    def __init__(self, message, residual_fraction=None):
        super().__init__(message)
        self.residual_fraction = residual_fraction

    def __reduce__(self):
        return type(self), (self.args[0], self.residual_fraction)


class DivisibilityError(FLRError, ValueError):
    """The sample size is not divisible by the number of shards."""


class ConstructionError(FLRError, RuntimeError):
    """A randomized construction did not reach its target."""


class PayloadError(FLRError, ValueError):
    """A serialized payload is corrupt, truncated or of the wrong version."""


class ConfigError(FLRError, ValueError):
    """An experiment configuration is invalid."""


class ShardFitError(FLRError, RuntimeError):
    """A local fit failed on one shard of a distributed fit."""

    def __init__(self, shard, cause):
        super().__init__(f"shard {shard}: {type(cause).__name__}: {cause}")
        self.shard = shard
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.shard, self.cause)
