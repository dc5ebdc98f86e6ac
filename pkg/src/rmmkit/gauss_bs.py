"""Standard normal special functions and zero-rate Black-Scholes values.

All functions are scalar and pure.  ``sigma`` and ``tau`` share one arbitrary
time unit; only ``sigma * sqrt(tau)`` ever enters a formula.  There is no
interest rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from rmmkit.errors import DomainError

SQRT2 = math.sqrt(2.0)
INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the normal quantile (relative error ~1.15e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _check_finite(x: float) -> None:
    if not math.isfinite(x):
        raise DomainError(f"expected a finite real, got {x!r}")


def normal_pdf(x: float) -> float:
    """Standard normal density."""
    _check_finite(x)
    return INV_SQRT2PI * math.exp(-0.5 * x * x)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function, via ``erfc`` so both tails keep relative accuracy."""
    _check_finite(x)
    return 0.5 * math.erfc(-x / SQRT2)


def normal_cdf_diff(x: float, y: float) -> float:
    """``N(x) - N(y)``, taken through the lower tail when both points sit in the upper one."""
    if x > 0.0 and y > 0.0:
        return normal_cdf(-y) - normal_cdf(-x)
    return normal_cdf(x) - normal_cdf(y)


def _initial_quantile(u: float) -> float:
    if u < _P_LOW:
        q = math.sqrt(-2.0 * math.log(u))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = u - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def normal_quantile(u: float) -> float:
    """Inverse of :func:`normal_cdf` on the open unit interval.

    A rational first guess is polished by two Newton steps on the cdf.  The
    upper half is mapped onto the lower half (``1 - u`` is exact there), so
    the lower tail carries full relative precision down to subnormal ``u``.
    Callers decide how to clamp; ``u`` outside (0, 1) raises.
    """
    _check_finite(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile argument must lie in (0, 1), got {u!r}")
    if u == 0.5:
        return 0.0
    if u > 0.5:
        return -normal_quantile(1.0 - u)
    x = _initial_quantile(u)
    for _ in range(2):
        dens = INV_SQRT2PI * math.exp(-0.5 * x * x)
        if dens == 0.0:
            break
        x -= (0.5 * math.erfc(-x / SQRT2) - u) / dens
    return x


@dataclass(frozen=True)
class OptionParams:
    """Strike, implied volatility and time to expiry of a European option."""

    strike: float
    sigma: float
    tau: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise DomainError(f"strike must be positive, got {self.strike!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise DomainError(f"tau must be nonnegative, got {self.tau!r}")

    @property
    def sigma_sqrt_tau(self) -> float:
        return self.sigma * math.sqrt(self.tau)

    def with_tau(self, tau: float) -> "OptionParams":
        return OptionParams(self.strike, self.sigma, tau)


class D1D2(NamedTuple):
    d1: float
    d2: float


def _check_price(S: float) -> None:
    if not (math.isfinite(S) and S > 0):
        raise DomainError(f"price must be positive and finite, got {S!r}")


def d1_d2(S: float, params: OptionParams) -> D1D2:
    """Black-Scholes ``d1`` and ``d2`` with zero rate; undefined at expiry."""
    _check_price(S)
    if params.tau == 0:
        raise DomainError("d1/d2 diverge at tau = 0; use the expiry branch")
    s = params.sigma_sqrt_tau
    d1 = (math.log(S / params.strike) + 0.5 * s * s) / s
    return D1D2(d1, d1 - s)


def call_value(S: float, params: OptionParams) -> float:
    """Value of a long call, ``S N(d1) - K N(d2)``; intrinsic value at expiry."""
    _check_price(S)
    K = params.strike
    if params.tau == 0:
        return max(S - K, 0.0)
    d1, d2 = d1_d2(S, params)
    return max(S * normal_cdf(d1) - K * normal_cdf(d2), 0.0)


def covered_call_value(S: float, params: OptionParams) -> float:
    """Value of long underlying plus short call, ``S N(-d1) + K N(d2)``; ``min(S, K)`` at expiry."""
    _check_price(S)
    K = params.strike
    if params.tau == 0:
        return min(S, K)
    d1, d2 = d1_d2(S, params)
    return S * normal_cdf(-d1) + K * normal_cdf(d2)


def put_value(S: float, params: OptionParams) -> float:
    """Value of a long put, ``K N(-d2) - S N(-d1)``; intrinsic value at expiry."""
    _check_price(S)
    K = params.strike
    if params.tau == 0:
        return max(K - S, 0.0)
    d1, d2 = d1_d2(S, params)
    return max(K * normal_cdf(-d2) - S * normal_cdf(-d1), 0.0)
