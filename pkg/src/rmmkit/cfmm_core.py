"""Generic two-asset constant function market maker machinery.

A trading function maps reserves to a real number, the invariant.  A swap
``(delta, lam)`` is valid when ``phi(R + gamma*delta - lam) == phi(R)``: the
fee-discounted basket moves along an invariant curve, while the reserves are
credited with the full tendered basket.  Prices are gradient ratios with
asset 2 as numeraire.

Concrete trading functions implement :class:`TradingFunction`; each one
inverts its own invariant in closed form (``solve_out``), so no generic
root finder is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from rmmkit.errors import DomainError, InvalidLiquidityChange, LiquidityError

#: Tolerance for swap validity, on the invariant scale (relative when k != 0).
VALID_SWAP_TOL = 1e-9
#: Relative tolerance for price preservation under liquidity changes.
PRICE_PRESERVATION_TOL = 1e-9


@dataclass(frozen=True)
class Reserves:
    """Quantities of Token1 and Token2 held by a pool (or per LP token)."""

    r1: float
    r2: float

    def __post_init__(self) -> None:
        for name, v in (("r1", self.r1), ("r2", self.r2)):
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"reserve {name} must be finite and >= 0, got {v!r}")

    def __iter__(self):
        yield self.r1
        yield self.r2

    def __getitem__(self, i: int) -> float:
        return (self.r1, self.r2)[i]


class PriceVector(NamedTuple):
    p1: float
    p2: float


@dataclass(frozen=True)
class Trade:
    """A proposed trade: tendered basket ``delta`` and received basket ``lam``."""

    delta: tuple[float, float]
    lam: tuple[float, float]

    def __post_init__(self) -> None:
        for v in (*self.delta, *self.lam):
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"trade baskets must be finite and nonnegative, got {self}")

    @property
    def is_empty(self) -> bool:
        return not any(self.delta) and not any(self.lam)


def check_gamma(gamma: float) -> float:
    if not (math.isfinite(gamma) and 0.0 < gamma <= 1.0):
        raise DomainError(f"fee gamma must lie in (0, 1], got {gamma!r}")
    return gamma


class TradingFunction:
    """Interface every two-asset trading function provides."""

    def in_domain(self, r: Reserves) -> bool:
        return True

    def is_interior(self, r: Reserves) -> bool:
        return self.in_domain(r)

    def value(self, r: Reserves) -> float:
        raise NotImplementedError

    def gradient(self, r: Reserves) -> PriceVector:
        raise NotImplementedError

    def solve_out(self, r: Reserves, tendered: int, amount: float, k: float) -> float:
        """Amount of the other asset to remove so that ``phi == k`` after adding ``amount`` of ``tendered``."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantSum(TradingFunction):
    """``phi(R) = P1*R1 + P2*R2``: every swap clears at the single price ``P1/P2``."""

    p1_const: float
    p2_const: float

    def __post_init__(self) -> None:
        if not (self.p1_const > 0 and self.p2_const > 0):
            raise DomainError("constant-sum coefficients must be positive")

    def value(self, r: Reserves) -> float:
        return self.p1_const * r.r1 + self.p2_const * r.r2

    def gradient(self, r: Reserves) -> PriceVector:
        return PriceVector(self.p1_const, self.p2_const)

    def solve_out(self, r: Reserves, tendered: int, amount: float, k: float) -> float:
        slack = self.value(r) - k
        if tendered == 0:
            return (self.p1_const * amount + slack) / self.p2_const
        return (self.p2_const * amount + slack) / self.p1_const


def evaluate(tf: TradingFunction, r: Reserves) -> float:
    """The invariant ``k = phi(R)``."""
    if not tf.in_domain(r):
        raise DomainError(f"reserves {r} outside the domain of {tf!r}")
    return tf.value(r)


class SwapCheck(NamedTuple):
    valid: bool
    reason: str

    def __bool__(self) -> bool:
        return self.valid


def _invariant_tol(k: float) -> float:
    return VALID_SWAP_TOL * abs(k) if k != 0 else VALID_SWAP_TOL


def check_swap(tf: TradingFunction, r: Reserves, trade: Trade, gamma: float) -> SwapCheck:
    """Validity of ``trade`` with a reason: ``ok``, ``empty``, ``domain-exit`` or ``invariant-mismatch``."""
    check_gamma(gamma)
    if trade.is_empty:
        return SwapCheck(False, "empty")
    k = evaluate(tf, r)
    q1 = r.r1 + gamma * trade.delta[0] - trade.lam[0]
    q2 = r.r2 + gamma * trade.delta[1] - trade.lam[1]
    try:
        after = Reserves(q1, q2)
    except DomainError:
        return SwapCheck(False, "domain-exit")
    if not tf.in_domain(after):
        return SwapCheck(False, "domain-exit")
    if abs(tf.value(after) - k) > _invariant_tol(k):
        return SwapCheck(False, "invariant-mismatch")
    return SwapCheck(True, "ok")


def is_valid_swap(tf: TradingFunction, r: Reserves, trade: Trade, gamma: float) -> bool:
    return check_swap(tf, r, trade, gamma).valid


class SwapResult(NamedTuple):
    received: tuple[float, float]
    reserves: Reserves


def apply_swap(tf: TradingFunction, r: Reserves, delta: tuple[float, float], gamma: float) -> SwapResult:
    """Execute a single-sided swap.

    The received amount solves the invariant on the fee-discounted basket;
    the new reserves are ``R + delta - lam`` (the full tendered amount is
    credited, so with ``gamma < 1`` the invariant grows on curved pools).
    """
    check_gamma(gamma)
    d1, d2 = delta
    if not (math.isfinite(d1) and math.isfinite(d2)) or min(d1, d2) < 0 or (d1 > 0) == (d2 > 0):
        raise DomainError(f"exactly one tendered asset must be positive, got {delta!r}")
    tendered = 0 if d1 > 0 else 1
    amount = delta[tendered]
    k = evaluate(tf, r)
    out = tf.solve_out(r, tendered, gamma * amount, k)
    available = r[1 - tendered]
    if out > available:
        raise LiquidityError(f"swap needs {out!r} of asset {2 - tendered} but only {available!r} is held")
    out = max(out, 0.0)
    if tendered == 0:
        received = (0.0, out)
        new = Reserves(r.r1 + d1, r.r2 - out)
    else:
        received = (out, 0.0)
        new = Reserves(r.r1 - out, r.r2 + d2)
    if not tf.in_domain(new):
        raise DomainError(f"swap leaves the domain: {new}")
    return SwapResult(received, new)


def price_vector(tf: TradingFunction, r: Reserves) -> PriceVector:
    if not tf.is_interior(r):
        raise DomainError(f"price undefined at boundary reserves {r}")
    return tf.gradient(r)


def reported_price(tf: TradingFunction, r: Reserves) -> float:
    """Price of Token1 in Token2: ``(grad phi)_1 / (grad phi)_2``."""
    g = price_vector(tf, r)
    return g.p1 / g.p2


def reserve_value(tf: TradingFunction, r: Reserves) -> float:
    """Value of the reserves in the numeraire, ``(P . R) / P2 = p*R1 + R2``."""
    return reported_price(tf, r) * r.r1 + r.r2


def apply_liquidity_change(
    tf: TradingFunction, r: Reserves, basket: tuple[float, float], direction: str
) -> Reserves:
    """Add or remove ``basket``; rejected unless the reported price is preserved."""
    if direction not in ("add", "remove"):
        raise ValueError(f"direction must be 'add' or 'remove', got {direction!r}")
    b1, b2 = basket
    if min(b1, b2) < 0 or not (b1 > 0 or b2 > 0):
        raise InvalidLiquidityChange(f"liquidity basket must be nonnegative and nonzero, got {basket!r}")
    if direction == "add":
        new = Reserves(r.r1 + b1, r.r2 + b2)
    else:
        if b1 > r.r1 or b2 > r.r2:
            raise LiquidityError(f"cannot remove {basket!r} from {r}")
        new = Reserves(r.r1 - b1, r.r2 - b2)
    before = reported_price(tf, r)
    try:
        after = reported_price(tf, new)
    except DomainError as exc:
        raise InvalidLiquidityChange(f"liquidity change leaves the price domain: {exc}") from None
    if abs(after - before) > PRICE_PRESERVATION_TOL * abs(before):
        raise InvalidLiquidityChange(f"price would move from {before!r} to {after!r}")
    return new
