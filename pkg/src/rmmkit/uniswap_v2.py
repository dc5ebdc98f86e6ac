"""Constant-product pool (``phi = R1 * R2``), its price impact and infinitesimal price impact."""
from __future__ import annotations

import math
from dataclasses import dataclass

from rmmkit.cfmm_core import (
    PriceVector,
    Reserves,
    SwapResult,
    TradingFunction,
    apply_swap,
    check_gamma,
)
from rmmkit.errors import DomainError


class ConstantProduct(TradingFunction):
    def in_domain(self, r: Reserves) -> bool:
        return True

    def is_interior(self, r: Reserves) -> bool:
        return r.r1 > 0 and r.r2 > 0

    def value(self, r: Reserves) -> float:
        return r.r1 * r.r2

    def gradient(self, r: Reserves) -> PriceVector:
        return PriceVector(r.r2, r.r1)

    def solve_out(self, r: Reserves, tendered: int, amount: float, k: float) -> float:
        r_in, r_out = (r.r1, r.r2) if tendered == 0 else (r.r2, r.r1)
        # (r_in + a)(r_out - x) = k, written to avoid cancellation when k == r_in*r_out
        return (r_out * amount + (r_in * r_out - k)) / (r_in + amount)

    def __repr__(self) -> str:
        return "ConstantProduct()"


CONSTANT_PRODUCT = ConstantProduct()


@dataclass(frozen=True)
class UniPool:
    reserves: Reserves
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not (self.reserves.r1 > 0 and self.reserves.r2 > 0):
            raise DomainError(f"constant-product reserves must be positive, got {self.reserves}")
        check_gamma(self.gamma)

    @property
    def price(self) -> float:
        return self.reserves.r2 / self.reserves.r1

    @classmethod
    def at_price(cls, price: float, r1: float = 1.0, gamma: float = 1.0) -> "UniPool":
        return cls(Reserves(r1, r1 * price), gamma)


def uni_swap_out(pool: UniPool, delta1: float) -> float:
    """Token2 received for tendering ``delta1`` Token1: ``g*d*R2 / (R1 + g*d)``."""
    if not (math.isfinite(delta1) and delta1 > 0):
        raise DomainError(f"delta1 must be positive, got {delta1!r}")
    r1, r2 = pool.reserves
    gd = pool.gamma * delta1
    return gd * r2 / (r1 + gd)


def uni_swap(pool: UniPool, delta: tuple[float, float]) -> tuple[SwapResult, UniPool]:
    """Single-sided swap in either direction; returns the fill and the updated pool."""
    res = apply_swap(CONSTANT_PRODUCT, pool.reserves, delta, pool.gamma)
    return res, UniPool(res.reserves, pool.gamma)


def uni_price_impact(pool: UniPool, delta1: float) -> float:
    """Marginal rate ``dLambda2/dDelta1 = g*R1*R2 / (R1 + g*Delta1)^2``."""
    if not (math.isfinite(delta1) and delta1 >= 0):
        raise DomainError(f"delta1 must be nonnegative, got {delta1!r}")
    r1, r2 = pool.reserves
    g = pool.gamma
    return g * r1 * r2 / (r1 + g * delta1) ** 2


def uni_tangent(pool: UniPool) -> tuple[float, float]:
    """``J grad(phi)`` with ``grad(phi) = (R2, R1)``: the invariant-curve tangent ``(-R1, R2)``."""
    r1, r2 = pool.reserves
    return (-r1, r2)


def uni_directional_price_derivative(pool: UniPool) -> float:
    """Derivative of ``R2/R1`` along :func:`uni_tangent`; equals ``2p``."""
    return 2.0 * pool.price


def uni_swap_to_price(pool: UniPool, target: float) -> tuple[int, float]:
    """Tendered asset index and amount that land the pool's reported price on ``target``.

    Accounts for the fee: the invariant moves on ``gamma*delta`` while the
    reserves receive ``delta``, so the post-trade price solves a quadratic.
    """
    if not (math.isfinite(target) and target > 0):
        raise DomainError(f"target price must be positive, got {target!r}")
    r1, r2 = pool.reserves
    g = pool.gamma
    p = r2 / r1
    if target == p:
        return 0, 0.0
    if target < p:
        # price' = R1 R2 / ((R1 + g d)(R1 + d))
        r_in, c = r1, r1 * r2 / target
        idx = 0
    else:
        # price' = (R2 + d)(R2 + g d) / (R1 R2)
        r_in, c = r2, target * r1 * r2
        idx = 1
    disc = r_in * r_in * (1.0 - g) ** 2 + 4.0 * g * c
    d = 2.0 * (c - r_in * r_in) / (r_in * (1.0 + g) + math.sqrt(disc))
    return idx, d
