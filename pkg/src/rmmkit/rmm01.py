"""RMM-01: the time-dependent covered-call replicating trading function.

Per LP token, with ``s = sigma * sqrt(tau)``::

    phi(R) = R2 - K * N(Ninv(1 - R1) - s)         (tau > 0)
    phi(R) = R2 - K * (1 - R1)                     (tau = 0, constant sum)

``k = phi(R)`` measures replication accuracy (``k == 0`` is perfect).  The
reported price depends on ``R1`` only::

    p = K * exp(Ninv(1 - R1) * s - s**2 / 2)

Most closed forms below are written in terms of the quantile coordinate
``a = Ninv(1 - R1)``.  Near ``R1 -> 1`` the float ``R1`` no longer carries
``1 - R1`` accurately, so the coordinate is recovered from the Token2
reserve (``R2 - k = K N(a - s)``) whenever that side is better conditioned.

Fees.  A swap tendering ``D`` moves the reserves along the invariant curve
by the discounted amount ``gamma * D``; the remaining ``(1 - gamma) * D`` is
credited to a per-LPT fee balance owned by the LPs.  That balance is a
price-preserving addition (it never enters the trading function), so the
post-swap reported price is exactly the closed-form new price and swaps
never change ``k``.  Only :func:`advance_time` moves ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from rmmkit.cfmm_core import PriceVector, Reserves, TradingFunction, check_gamma
from rmmkit.errors import DomainError, LiquidityError, WrongDirectionError
from rmmkit.gauss_bs import (
    OptionParams,
    covered_call_value,
    normal_cdf,
    normal_cdf_diff,
    normal_pdf,
    normal_quantile,
)

#: Exact-input swaps landing closer than this to R1 in {0, 1} are rejected.
BOUNDARY_EPS = 1e-12
#: Largest |coordinate| kept by price-targeting trades; N(-37) is ~6e-300.
COORDINATE_CAP = 37.0
# relative slack when an exact-input fill equals the whole out-reserve
_FILL_SLACK = 1e-12


@dataclass(frozen=True)
class Rmm01Params:
    """Immutable pool configuration: strike, implied vol, maturity and fee."""

    strike: float
    sigma: float
    maturity: float
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise DomainError(f"strike must be positive, got {self.strike!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if not (math.isfinite(self.maturity) and self.maturity >= 0):
            raise DomainError(f"maturity must be nonnegative, got {self.maturity!r}")
        check_gamma(self.gamma)

    def option(self, tau: float) -> OptionParams:
        return OptionParams(self.strike, self.sigma, tau)

    def width(self, tau: float) -> float:
        """``sigma * sqrt(tau)``."""
        return self.sigma * math.sqrt(tau)


@dataclass(frozen=True)
class Rmm01State:
    """Per-LPT pool state.  Build with :func:`make_state` or :func:`state_from_price`."""

    reserves: Reserves
    tau: float
    invariant_k: float
    fees: tuple[float, float] = (0.0, 0.0)

    @property
    def r1(self) -> float:
        return self.reserves.r1

    @property
    def r2(self) -> float:
        return self.reserves.r2


@dataclass(frozen=True)
class SwapQuote:
    side: str  # "token1_in" or "token2_in"
    tendered: float
    received: float
    fee: float
    new_price: float
    new_state: Rmm01State
    clipped: bool = False

    @property
    def lam(self) -> float:
        return self.received


def _check_tau(tau: float) -> None:
    if not (math.isfinite(tau) and tau >= 0):
        raise DomainError(f"tau must be finite and >= 0, got {tau!r}")


def trading_function(r: Reserves, params: Rmm01Params, tau: float) -> float:
    """The invariant ``k`` of reserves ``r`` on the curve for time-to-expiry ``tau``."""
    _check_tau(tau)
    K = params.strike
    if tau == 0:
        return r.r2 - K * (1.0 - r.r1)
    if not 0.0 < r.r1 < 1.0:
        raise DomainError(f"R1 must lie in (0, 1) before expiry, got {r.r1!r}")
    a = -normal_quantile(r.r1) if r.r1 <= 0.5 else normal_quantile(1.0 - r.r1)
    return r.r2 - K * normal_cdf(a - params.width(tau))


def make_state(
    reserves: Reserves, params: Rmm01Params, tau: float, fees: tuple[float, float] = (0.0, 0.0)
) -> Rmm01State:
    k = trading_function(reserves, params, tau)
    return Rmm01State(reserves, tau, k, fees)


def coordinate(state: Rmm01State, params: Rmm01Params) -> float:
    """``Ninv(1 - R1)`` for a live pool, computed from the better-conditioned reserve."""
    if state.tau == 0:
        raise DomainError("the quantile coordinate is undefined at expiry")
    r1, r2, k = state.r1, state.r2, state.invariant_k
    K = params.strike
    if 0.0 < r1 <= 0.5:
        return -normal_quantile(r1)
    u2 = (r2 - k) / K
    if r1 > 0.5 and 0.0 < u2 < 1.0 and (1.0 - r1) * max(abs(r2), abs(k)) < (r2 - k):
        return normal_quantile(u2) + params.width(state.tau)
    if 0.5 < r1 < 1.0:
        return normal_quantile(1.0 - r1)
    raise DomainError(f"R1 must lie in (0, 1) before expiry, got {r1!r}")


def price_from_coordinate(a: float, params: Rmm01Params, tau: float) -> float:
    s = params.width(tau)
    return params.strike * math.exp(a * s - 0.5 * s * s)


def price_from_r1(r1: float, params: Rmm01Params, tau: float) -> float:
    """Reported price as a function of the Token1 reserve alone."""
    _check_tau(tau)
    if tau == 0:
        return params.strike
    if not 0.0 < r1 < 1.0:
        raise DomainError(f"R1 must lie in (0, 1) before expiry, got {r1!r}")
    a = -normal_quantile(r1) if r1 <= 0.5 else normal_quantile(1.0 - r1)
    return price_from_coordinate(a, params, tau)


def reported_price(state: Rmm01State, params: Rmm01Params) -> float:
    """``K exp(Ninv(1 - R1) s - s^2/2)``; exactly ``K`` at expiry."""
    if state.tau == 0:
        return params.strike
    return price_from_coordinate(coordinate(state, params), params, state.tau)


def gradient_price(state: Rmm01State, params: Rmm01Params) -> float:
    """Reported price in gradient-ratio form ``K pdf(a - s) / pdf(a)``."""
    if state.tau == 0:
        return params.strike
    a = coordinate(state, params)
    return params.strike * normal_pdf(a - params.width(state.tau)) / normal_pdf(a)


def reserves_from_price(S: float, params: Rmm01Params, tau: float) -> Reserves:
    """Per-LPT reserves on the ``k = 0`` curve whose reported price is ``S``."""
    if not (math.isfinite(S) and S > 0):
        raise DomainError(f"price must be positive, got {S!r}")
    _check_tau(tau)
    if tau == 0:
        raise DomainError("every constant-sum point prices at K at expiry; reserves are not determined")
    s = params.width(tau)
    d1 = (math.log(S / params.strike) + 0.5 * s * s) / s
    return Reserves(normal_cdf(-d1), params.strike * normal_cdf(d1 - s))


def state_from_price(S: float, params: Rmm01Params, tau: float) -> Rmm01State:
    """A perfectly replicating state (``k = 0``) at price ``S``."""
    return Rmm01State(reserves_from_price(S, params, tau), tau, 0.0)


def lpt_value(state: Rmm01State, params: Rmm01Params, price: float | None = None) -> float:
    """Value of one LPT in Token2, reserves plus accrued fees.

    Marked at the reported price unless ``price`` is given.  At ``k = 0`` and
    ``p = S`` this equals the Black-Scholes covered call.
    """
    p = reported_price(state, params) if price is None else price
    f1, f2 = state.fees
    return p * (state.r1 + f1) + state.r2 + f2


def covered_call_at(S: float, params: Rmm01Params, tau: float) -> float:
    return covered_call_value(S, params.option(tau))


def _check_amount(x: float, name: str) -> None:
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"{name} must be positive and finite, got {x!r}")


def _cap_fill(out: float, available: float) -> float:
    if out > available:
        if out - available <= _FILL_SLACK * max(available, 1.0):
            return available
        raise LiquidityError(f"swap needs {out!r} but the pool holds {available!r}")
    return max(out, 0.0)


def swap_exact_token1_in(state: Rmm01State, params: Rmm01Params, delta1: float) -> SwapQuote:
    """Tender ``delta1`` Token1 (per LPT); the price falls to ``K exp(Ninv(1-R1-g*d1) s - s^2/2)``."""
    _check_amount(delta1, "delta1")
    g = params.gamma
    K = params.strike
    gd = g * delta1
    fees = (state.fees[0] + (1.0 - g) * delta1, state.fees[1])
    if state.tau == 0:
        out = _cap_fill(g * K * delta1, state.r2)
        new = Rmm01State(Reserves(state.r1 + gd, state.r2 - out), 0.0, state.invariant_k, fees)
        return SwapQuote("token1_in", delta1, out, (1.0 - g) * delta1, K, new)
    s = params.width(state.tau)
    a = coordinate(state, params)
    u = normal_cdf(a) - gd
    if u < BOUNDARY_EPS:
        raise DomainError(f"swap would push R1 to within {BOUNDARY_EPS} of 1 (1 - R1' = {u!r})")
    a_new = normal_quantile(u)
    out = K * normal_cdf_diff(a - s, a_new - s)
    new_r2 = state.r2 - out
    if new_r2 < 0:
        if new_r2 < -_FILL_SLACK * max(state.r2, 1.0):
            raise LiquidityError(f"swap needs more Token2 than the pool holds ({state.r2!r})")
        out, new_r2 = state.r2, 0.0
    new = Rmm01State(Reserves(state.r1 + gd, new_r2), state.tau, state.invariant_k, fees)
    return SwapQuote(
        "token1_in", delta1, out, (1.0 - g) * delta1, price_from_coordinate(a_new, params, state.tau), new
    )


def swap_exact_token2_in(state: Rmm01State, params: Rmm01Params, delta2: float) -> SwapQuote:
    """Tender ``delta2`` Token2 (per LPT); the price rises to ``K exp(Ninv((R2-k+g*d2)/K) s + s^2/2)``."""
    _check_amount(delta2, "delta2")
    g = params.gamma
    K = params.strike
    gd = g * delta2
    fees = (state.fees[0], state.fees[1] + (1.0 - g) * delta2)
    if state.tau == 0:
        out = _cap_fill(gd / K, state.r1)
        new = Rmm01State(Reserves(state.r1 - out, state.r2 + gd), 0.0, state.invariant_k, fees)
        return SwapQuote("token2_in", delta2, out, (1.0 - g) * delta2, K, new)
    s = params.width(state.tau)
    u = (state.r2 - state.invariant_k + gd) / K
    if not 0.0 < u < 1.0:
        raise DomainError(f"swap leaves the reserve domain ((R2 - k + g*d2)/K = {u!r})")
    a_new = normal_quantile(u) + s
    if normal_cdf(-a_new) < BOUNDARY_EPS:
        raise DomainError(f"swap would push R1 to within {BOUNDARY_EPS} of 0 (R1' = {normal_cdf(-a_new)!r})")
    a = coordinate(state, params)
    out = min(normal_cdf_diff(-a, -a_new), state.r1)
    new_r1 = state.r1 - out
    new = Rmm01State(Reserves(new_r1, state.r2 + gd), state.tau, state.invariant_k, fees)
    return SwapQuote(
        "token2_in", delta2, out, (1.0 - g) * delta2, price_from_coordinate(a_new, params, state.tau), new
    )


def swap_to_price(state: Rmm01State, params: Rmm01Params, target: float) -> SwapQuote | None:
    """Trade that moves the reported price to ``target``; ``None`` if already there.

    The post-trade point is computed from the target directly (no
    cancellation), so this works deep in the tails where exact-input swaps
    are refused.  When the target lies beyond what the reserves can reach
    (Token2 exhausted, or a coordinate past ``COORDINATE_CAP``) the trade
    stops at that boundary and the quote is flagged ``clipped``.
    """
    if not (math.isfinite(target) and target > 0):
        raise DomainError(f"target price must be positive, got {target!r}")
    if state.tau == 0:
        raise DomainError("the reported price is pinned at K after expiry")
    g = params.gamma
    K = params.strike
    k = state.invariant_k
    s = params.width(state.tau)
    a = coordinate(state, params)
    a_new = (math.log(target / K) + 0.5 * s * s) / s
    clipped = False
    if abs(a_new) > COORDINATE_CAP:
        a_new = math.copysign(COORDINATE_CAP, a_new)
        clipped = True
    if a_new == a:
        return None
    if a_new < a:
        new_r2 = k + K * normal_cdf(a_new - s)
        if new_r2 < 0:
            # Token2 runs out first: stop where R2 - k = -k
            a_new = normal_quantile(-k / K) + s
            new_r2 = 0.0
            clipped = True
        delta = normal_cdf_diff(a, a_new) / g
        out = state.r2 if new_r2 == 0.0 else min(max(K * normal_cdf_diff(a - s, a_new - s), 0.0), state.r2)
        new_reserves = Reserves(normal_cdf(-a_new), new_r2)
        fees = (state.fees[0] + (1.0 - g) * delta, state.fees[1])
        side = "token1_in"
    else:
        delta = K * normal_cdf_diff(a_new - s, a - s) / g
        new_r1 = normal_cdf(-a_new)
        out = min(max(normal_cdf_diff(-a, -a_new), 0.0), state.r1)
        new_reserves = Reserves(new_r1, state.r2 + g * delta)
        fees = (state.fees[0], state.fees[1] + (1.0 - g) * delta)
        side = "token2_in"
    new = Rmm01State(new_reserves, state.tau, k, fees)
    return SwapQuote(
        side, delta, out, (1.0 - g) * delta, price_from_coordinate(a_new, params, state.tau), new, clipped
    )


def manipulation_delta1(state: Rmm01State, params: Rmm01Params, epsilon: float) -> float:
    """Token1 (per LPT) that moves the price from ``p`` to ``(1 + epsilon) p``, ``epsilon <= 0``."""
    if not math.isfinite(epsilon) or epsilon <= -1:
        raise DomainError(f"epsilon must exceed -1, got {epsilon!r}")
    if epsilon > 0:
        raise WrongDirectionError("tendering Token1 can only lower the price (epsilon must be <= 0)")
    if epsilon == 0:
        return 0.0
    if state.tau == 0:
        raise DomainError("the price cannot be moved after expiry")
    s = params.width(state.tau)
    a = coordinate(state, params)
    return normal_cdf_diff(a, a + math.log1p(epsilon) / s) / params.gamma


def manipulation_delta2(state: Rmm01State, params: Rmm01Params, epsilon: float) -> float:
    """Token2 (per LPT) that moves the price from ``p`` to ``(1 + epsilon) p``, ``epsilon >= 0``."""
    if not math.isfinite(epsilon) or epsilon <= -1:
        raise DomainError(f"epsilon must exceed -1, got {epsilon!r}")
    if epsilon < 0:
        raise WrongDirectionError("tendering Token2 can only raise the price (epsilon must be >= 0)")
    if epsilon == 0:
        return 0.0
    if state.tau == 0:
        raise DomainError("the price cannot be moved after expiry")
    s = params.width(state.tau)
    a = coordinate(state, params)
    K = params.strike
    # R2 - k = K N(a - s), so this is the k-carrying form of the Token2 cost
    return K * normal_cdf_diff(a - s + math.log1p(epsilon) / s, a - s) / params.gamma


def rmm_tangent(state: Rmm01State, params: Rmm01Params) -> tuple[float, float]:
    """``J grad(phi) = (-1, p)``, tangent to the invariant curve."""
    return (-1.0, reported_price(state, params))


def rmm_directional_price_derivative(state: Rmm01State, params: Rmm01Params) -> float:
    """Derivative of the price along :func:`rmm_tangent`: ``p s / pdf(Ninv(1 - R1))``; 0 at expiry."""
    if state.tau == 0:
        return 0.0
    a = coordinate(state, params)
    return price_from_coordinate(a, params, state.tau) * params.width(state.tau) / normal_pdf(a)


def uniswap_dominance_bound(r1: float) -> float:
    """Threshold ``2 pdf(Ninv(1 - R1))``: RMM-01 has less infinitesimal price impact
    than a constant-product pool at the same price iff ``sigma sqrt(tau)`` is below it."""
    if not (math.isfinite(r1) and 0.0 < r1 < 1.0):
        raise DomainError(f"R1 must lie in (0, 1), got {r1!r}")
    a = -normal_quantile(r1) if r1 <= 0.5 else normal_quantile(1.0 - r1)
    return 2.0 * normal_pdf(a)


def advance_time(state: Rmm01State, params: Rmm01Params, dt: float) -> Rmm01State:
    """Let ``dt`` elapse.  Reserves stay put; ``k`` is re-read on the new curve."""
    if not (math.isfinite(dt) and dt >= 0):
        raise DomainError(f"dt must be nonnegative, got {dt!r}")
    if dt == 0 or state.tau == 0:
        return state
    tau = max(state.tau - dt, 0.0)
    K = params.strike
    if tau == 0:
        k = state.r2 - K * (1.0 - state.r1)
    else:
        a = coordinate(state, params)
        k = state.r2 - K * normal_cdf(a - params.width(tau))
    return replace(state, tau=tau, invariant_k=k)


class Rmm01TradingFunction(TradingFunction):
    """Adapter exposing the RMM-01 curve at a fixed ``tau`` to :mod:`rmmkit.cfmm_core`."""

    def __init__(self, params: Rmm01Params, tau: float):
        _check_tau(tau)
        self.params = params
        self.tau = tau

    def __repr__(self) -> str:
        return f"Rmm01TradingFunction({self.params!r}, tau={self.tau!r})"

    def in_domain(self, r: Reserves) -> bool:
        return self.tau == 0 or 0.0 < r.r1 < 1.0

    def value(self, r: Reserves) -> float:
        return trading_function(r, self.params, self.tau)

    def gradient(self, r: Reserves) -> PriceVector:
        return PriceVector(price_from_r1(r.r1, self.params, self.tau), 1.0)

    def solve_out(self, r: Reserves, tendered: int, amount: float, k: float) -> float:
        K = self.params.strike
        if self.tau == 0:
            if tendered == 0:
                return r.r2 - k - K * (1.0 - r.r1 - amount)
            return r.r1 - (K + k - r.r2 - amount) / K
        s = self.params.width(self.tau)
        if tendered == 0:
            u = 1.0 - r.r1 - amount
            if not 0.0 < u < 1.0:
                raise DomainError(f"swap leaves the reserve domain (1 - R1' = {u!r})")
            return r.r2 - k - K * normal_cdf(normal_quantile(u) - s)
        u = (r.r2 - k + amount) / K
        if not 0.0 < u < 1.0:
            raise DomainError(f"swap leaves the reserve domain ((R2 - k + d)/K = {u!r})")
        return r.r1 - normal_cdf(-(normal_quantile(u) + s))


class Rmm01Pool:
    """Mutable wrapper holding a per-LPT state and an LPT supply.

    Baskets passed to the pool are totals; they are divided by the supply
    before touching the per-LPT state.  Minting and burning LPTs moves whole
    per-LPT baskets, so liquidity changes never move the price.  Not
    thread-safe: callers sharing a pool must serialise access.
    """

    def __init__(self, params: Rmm01Params, state: Rmm01State, supply: float = 1.0):
        _check_amount(supply, "supply")
        self.params = params
        self.state = state
        self.supply = supply

    @classmethod
    def at_price(cls, params: Rmm01Params, S: float, supply: float = 1.0) -> "Rmm01Pool":
        return cls(params, state_from_price(S, params, params.maturity), supply)

    @property
    def price(self) -> float:
        return reported_price(self.state, self.params)

    def per_lpt_basket(self) -> tuple[float, float]:
        f1, f2 = self.state.fees
        return (self.state.r1 + f1, self.state.r2 + f2)

    def total_reserves(self) -> tuple[float, float]:
        b1, b2 = self.per_lpt_basket()
        return (b1 * self.supply, b2 * self.supply)

    def swap_token1_in(self, delta1: float) -> float:
        q = swap_exact_token1_in(self.state, self.params, delta1 / self.supply)
        self.state = q.new_state
        return q.received * self.supply

    def swap_token2_in(self, delta2: float) -> float:
        q = swap_exact_token2_in(self.state, self.params, delta2 / self.supply)
        self.state = q.new_state
        return q.received * self.supply

    def manipulation_cost(self, epsilon: float) -> tuple[str, float]:
        """Total basket needed to move the price by ``epsilon``; linear in the supply."""
        if epsilon < 0:
            return "token1", self.supply * manipulation_delta1(self.state, self.params, epsilon)
        return "token2", self.supply * manipulation_delta2(self.state, self.params, epsilon)

    def add_liquidity(self, lpts: float) -> tuple[float, float]:
        """Mint ``lpts`` tokens; returns the basket the depositor must tender."""
        _check_amount(lpts, "lpts")
        b1, b2 = self.per_lpt_basket()
        self.supply += lpts
        return (b1 * lpts, b2 * lpts)

    def remove_liquidity(self, lpts: float) -> tuple[float, float]:
        """Burn ``lpts`` tokens; returns the basket paid out."""
        _check_amount(lpts, "lpts")
        if lpts > self.supply:
            raise LiquidityError(f"cannot burn {lpts!r} of {self.supply!r} LPTs")
        b1, b2 = self.per_lpt_basket()
        self.supply -= lpts
        return (b1 * lpts, b2 * lpts)

    def advance_time(self, dt: float) -> None:
        self.state = advance_time(self.state, self.params, dt)
