"""Constant function market makers and the RMM-01 covered-call replicating pool.

Modules
-------
gauss_bs       standard normal special functions, Black-Scholes values
cfmm_core      generic two-asset CFMM machinery and the constant-sum market
uniswap_v2     constant-product pool, price impact, directional derivative
rmm01          the time-dependent RMM-01 trading function and its closed forms
market_sim     GBM paths, fee-aware arbitrage, replication and impact studies
composability  synthetic calls/puts from borrowing and selling LP tokens
cli            ``rmmkit`` command line front end
"""

from rmmkit.errors import (
    ConfigError,
    DomainError,
    InvalidLiquidityChange,
    LiquidityError,
    RmmError,
    UndercollateralizedError,
    WrongDirectionError,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "InvalidLiquidityChange",
    "LiquidityError",
    "RmmError",
    "UndercollateralizedError",
    "WrongDirectionError",
]

__version__ = "0.1.0"
