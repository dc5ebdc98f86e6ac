"""Synthetic calls and puts from borrowing an RMM-01 LP token and selling it.

A covered call is long the underlying and short a call, so
``call = S - covered_call``: borrow one LPT against collateral, sell it, and
hold one unit of Token1.  The LPT is assumed perfectly replicating and
traded at its fair value ``covered_call_value``; the lending protocol is
abstract (no interest, whole-position liquidation when the debt value
exceeds the collateral value).

Unadjusted call position, per borrowed LPT:

=====  ==========  ==============  ====================  ==================
sale   collateral  Token1 held     value                 call - value
=====  ==========  ==============  ====================  ==================
x      y           x + y           (x + y) S - v_cc      (x + y - 1) S
=====  ==========  ==============  ====================  ==================

Buying ``z = 1 - x - y`` Token1 (selling when negative) closes the gap.
The Token2 paid for ``z`` at entry is carried as ``adjustment_cost`` and is
not part of the option value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from rmmkit.errors import DomainError, UndercollateralizedError
from rmmkit.gauss_bs import OptionParams, call_value, covered_call_value


@dataclass(frozen=True)
class LendingPosition:
    """Collateral posted against ``debt_lpt`` borrowed LP tokens."""

    collateral_asset: str  # "token1" or "token2"
    collateral: float
    strike: float
    sigma: float
    s_entry: float
    tau_entry: float
    debt_lpt: float = 1.0
    liquidated: bool = False

    def option(self, tau: float) -> OptionParams:
        return OptionParams(self.strike, self.sigma, tau)

    def debt_value(self, S: float, tau: float) -> float:
        return self.debt_lpt * covered_call_value(S, self.option(tau))

    def collateral_value(self, S: float) -> float:
        return self.collateral * S if self.collateral_asset == "token1" else self.collateral


@dataclass(frozen=True)
class SyntheticCall(LendingPosition):
    """Token1-collateralised short LPT: ``x`` sale proceeds, ``y`` collateral, ``z`` adjustment (Token1)."""

    x: float = 0.0
    z: float = 0.0
    adjusted: bool = True

    @property
    def y(self) -> float:
        return self.collateral

    @property
    def exposure(self) -> float:
        return self.x + self.y + (self.z if self.adjusted else 0.0)

    @property
    def adjustment_cost(self) -> float:
        return self.z * self.s_entry if self.adjusted else 0.0


@dataclass(frozen=True)
class SyntheticPut(LendingPosition):
    """Token2-collateralised short LPT; every leg is in Token2."""

    x: float = 0.0
    z: float = 0.0
    adjusted: bool = True

    @property
    def y(self) -> float:
        return self.collateral

    @property
    def legs(self) -> float:
        return self.x + self.y + (self.z if self.adjusted else 0.0)


def _check_entry(S: float, params: OptionParams) -> None:
    if not (math.isfinite(S) and S > 0):
        raise DomainError(f"price must be positive, got {S!r}")
    if params.tau <= 0:
        raise DomainError("positions are entered before expiry (tau > 0)")


def enter_synthetic_call(S: float, params: OptionParams, y: float, adjust: bool = True) -> SyntheticCall:
    """Post ``y`` Token1, borrow one LPT and sell it for ``x = v_cc / S`` Token1.

    With ``adjust`` the exposure is squared to one Token1 by ``z = 1 - x - y``.
    """
    _check_entry(S, params)
    x = covered_call_value(S, params) / S
    if not (math.isfinite(y) and y >= x):
        raise UndercollateralizedError(f"collateral y={y!r} is below the LPT sale value x={x!r}")
    return SyntheticCall(
        collateral_asset="token1", collateral=y, strike=params.strike, sigma=params.sigma,
        s_entry=S, tau_entry=params.tau, x=x, z=1.0 - x - y, adjusted=adjust,
    )


def enter_synthetic_put(
    S: float, params: OptionParams, y: float, adjust: bool = True, target_legs: float | None = None
) -> SyntheticPut:
    """Post ``y`` Token2, borrow one LPT and sell it for ``x = v_cc`` Token2.

    With ``adjust`` the Token2 legs are topped up (or trimmed) to
    ``target_legs``, by default the strike, which gives ``K - v_cc = put``.
    """
    _check_entry(S, params)
    x = covered_call_value(S, params)
    if not (math.isfinite(y) and y >= x):
        raise UndercollateralizedError(f"collateral y={y!r} is below the LPT sale value x={x!r}")
    legs = params.strike if target_legs is None else target_legs
    return SyntheticPut(
        collateral_asset="token2", collateral=y, strike=params.strike, sigma=params.sigma,
        s_entry=S, tau_entry=params.tau, x=x, z=legs - x - y, adjusted=adjust,
    )


def check_liquidation(pos: LendingPosition, S: float, tau: float) -> bool:
    """True when the borrowed LPT is worth more than the collateral."""
    opt = pos.option(tau)
    if pos.collateral_asset == "token1" and pos.debt_lpt == 1.0:
        # v_cc > y S  <=>  (1 - y) S > call; exact for y = 1 (never liquidated)
        return (1.0 - pos.collateral) * S > call_value(S, opt)
    return pos.debt_value(S, tau) > pos.collateral_value(S)


def liquidate(pos: LendingPosition) -> LendingPosition:
    return replace(pos, liquidated=True)


def value_synthetic_call(pos: SyntheticCall, S: float, tau: float) -> float:
    """Token2 value of the position; a liquidated position keeps only its ``x`` (and ``z``) Token1."""
    if pos.liquidated:
        return (pos.x + (pos.z if pos.adjusted else 0.0)) * S
    return pos.exposure * S - covered_call_value(S, pos.option(tau))


def value_synthetic_put(pos: SyntheticPut, S: float, tau: float) -> float:
    if pos.liquidated:
        return pos.x + (pos.z if pos.adjusted else 0.0)
    return pos.legs - covered_call_value(S, pos.option(tau))


def put_offset(pos: SyntheticPut) -> float:
    """Constant by which the synthetic put differs from a true put: ``legs - K``."""
    return pos.legs - pos.strike


def exit_synthetic_call(pos: SyntheticCall, S: float, tau: float) -> float:
    """Buy back the LPT at ``v_cc``, repay, recover the collateral.  Salvage only if liquidated."""
    return value_synthetic_call(pos, S, tau)


def exit_synthetic_put(pos: SyntheticPut, S: float, tau: float) -> float:
    return value_synthetic_put(pos, S, tau)


def max_loss(pos: SyntheticCall) -> float:
    """Worst-case loss of the unadjusted position, ``y * S_entry``."""
    return pos.y * pos.s_entry


def simulate_synthetic_call(
    prices, taus, params: OptionParams, y: float
) -> tuple[SyntheticCall, float, float]:
    """Hold an unadjusted synthetic call along a price path, checking liquidation each step.

    Returns ``(final position, realised value at the last step, loss)``,
    where loss is the entry equity ``y * S_entry`` minus the realised value.
    """
    prices = [float(p) for p in prices]
    taus = [float(t) for t in taus]
    if len(prices) != len(taus) or not prices:
        raise DomainError("prices and taus must be nonempty and of equal length")
    pos = enter_synthetic_call(prices[0], params.with_tau(taus[0]), y, adjust=False)
    for S, tau in zip(prices[1:], taus[1:]):
        if not pos.liquidated and check_liquidation(pos, S, tau):
            pos = liquidate(pos)
    realised = exit_synthetic_call(pos, prices[-1], taus[-1])
    return pos, realised, pos.y * pos.s_entry - realised
