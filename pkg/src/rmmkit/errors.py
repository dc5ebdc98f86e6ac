"""Exception hierarchy shared by every module."""


class RmmError(Exception):
    """Base class for all library errors."""


class DomainError(RmmError, ValueError):
    """An input (or a state a computation would reach) lies outside the model domain."""


class WrongDirectionError(DomainError):
    """A manipulation or swap was requested in a direction the tendered asset cannot move."""


class LiquidityError(RmmError, ValueError):
    """A trade or withdrawal needs more of an asset than the pool holds."""


class InvalidLiquidityChange(RmmError, ValueError):
    """A liquidity basket would change the reported price."""


class UndercollateralizedError(RmmError, ValueError):
    """Collateral is below the loan-to-value floor at entry."""


class ConfigError(RmmError, ValueError):
    """A scenario configuration violates a domain constraint."""
