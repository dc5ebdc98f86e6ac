"""Discrete-time market simulation around an RMM-01 pool.

* GBM external price paths from a seeded ``numpy`` PCG64 generator.
* A fee-aware arbitrageur that pushes the reported price to the nearest
  edge of the no-arbitrage band ``[gamma*m, m/gamma]``.
* Replication runs: time decay, then a price move, then arbitrage, each
  step; every step is recorded against the Black-Scholes covered call.
* Infinitesimal price-impact comparison against a constant-product pool.

Identical configuration and seed give byte-identical CSV output.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, TextIO

import numpy as np

from rmmkit.cfmm_core import Reserves, check_gamma
from rmmkit.errors import DomainError, RmmError
from rmmkit.gauss_bs import normal_cdf, normal_quantile
from rmmkit.rmm01 import (
    Rmm01Params,
    Rmm01State,
    advance_time,
    covered_call_at,
    lpt_value,
    make_state,
    reported_price,
    rmm_directional_price_derivative,
    state_from_price,
    swap_exact_token1_in,
    swap_exact_token2_in,
    swap_to_price,
    uniswap_dominance_bound,
)
from rmmkit.uniswap_v2 import UniPool, uni_directional_price_derivative, uni_swap, uni_swap_to_price

REPLICATION_COLUMNS = (
    "t", "tau", "S", "p", "k", "lpt_value", "cc_value",
    "arb_side", "arb_in", "arb_out", "fees_cum",
)


def fmt_float(x: float) -> str:
    return format(x, ".17g")


@dataclass(frozen=True)
class GbmParams:
    s0: float
    mu: float
    sigma: float
    dt: float
    steps: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.s0) and self.s0 > 0):
            raise DomainError(f"s0 must be positive, got {self.s0!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            raise DomainError(f"steps must be a positive integer, got {self.steps!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"path sigma must be nonnegative, got {self.sigma!r}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu!r}")


@dataclass(frozen=True)
class PricePath:
    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self) -> None:
        if self.times.shape != self.prices.shape:
            raise DomainError("times and prices must have equal length")
        if np.any(self.prices <= 0):
            raise DomainError("prices must be positive")

    def __len__(self) -> int:
        return len(self.prices)


def gbm_path(params: GbmParams) -> PricePath:
    """``S_{t+dt} = S_t exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z)`` with seeded PCG64 normals."""
    rng = np.random.default_rng(params.seed)
    z = rng.standard_normal(params.steps)
    incr = (params.mu - 0.5 * params.sigma**2) * params.dt + params.sigma * math.sqrt(params.dt) * z
    log_s = np.concatenate(([0.0], np.cumsum(incr)))
    times = params.dt * np.arange(params.steps + 1, dtype=float)
    return PricePath(times, params.s0 * np.exp(log_s))


class ArbBounds(NamedTuple):
    lower: float
    upper: float

    def contains(self, p: float, slack: float = 0.0) -> bool:
        return self.lower * (1.0 - slack) <= p <= self.upper * (1.0 + slack)


def arb_bounds(m: float, gamma: float) -> ArbBounds:
    """No-arbitrage band ``[gamma*m, m/gamma]`` for external price ``m``."""
    if not (math.isfinite(m) and m > 0):
        raise DomainError(f"external price must be positive, got {m!r}")
    check_gamma(gamma)
    return ArbBounds(gamma * m, m / gamma)


@dataclass(frozen=True)
class ArbResult:
    side: str  # "none", "token1_in" or "token2_in"
    tendered: float
    received: float
    fee: float
    profit: float
    state: object
    clipped: bool = False

    @property
    def traded(self) -> bool:
        return self.side != "none"


def _profit(side: str, tendered: float, received: float, m: float) -> float:
    if side == "token1_in":
        return received - m * tendered
    return m * received - tendered


def _arb_target(p: float, bounds: ArbBounds, gamma: float, fixed_rule: bool) -> float | None:
    if bounds.lower <= p <= bounds.upper:
        return None
    if fixed_rule:
        # epsilon = gamma - 1 to push the price down, 1/gamma - 1 to push it up
        return gamma * p if p > bounds.upper else p / gamma
    return bounds.upper if p > bounds.upper else bounds.lower


def _arb_rmm(state: Rmm01State, params: Rmm01Params, m: float, fixed_rule: bool) -> ArbResult:
    g = params.gamma
    bounds = arb_bounds(m, g)
    p = reported_price(state, params)
    if bounds.lower <= p <= bounds.upper:
        return ArbResult("none", 0.0, 0.0, 0.0, 0.0, state)
    if state.tau == 0:
        # the price is pinned at K: the only trade is to exhaust one side
        K = params.strike
        if p > bounds.upper and state.r2 > 0:
            q = swap_exact_token1_in(state, params, state.r2 / (g * K))
        elif p < bounds.lower and state.r1 > 0:
            q = swap_exact_token2_in(state, params, K * state.r1 / g)
        else:
            return ArbResult("none", 0.0, 0.0, 0.0, 0.0, state, clipped=True)
        return ArbResult(
            q.side, q.tendered, q.received, q.fee, _profit(q.side, q.tendered, q.received, m), q.new_state, True
        )
    target = _arb_target(p, bounds, g, fixed_rule)
    q = swap_to_price(state, params, target)
    if q is None:
        return ArbResult("none", 0.0, 0.0, 0.0, 0.0, state)
    profit = _profit(q.side, q.tendered, q.received, m)
    if profit < 0:
        # dust-sized gaps where rounding eats the edge; an arbitrageur would not submit this
        return ArbResult("none", 0.0, 0.0, 0.0, 0.0, state)
    return ArbResult(q.side, q.tendered, q.received, q.fee, profit, q.new_state, q.clipped)


def _arb_uni(pool: UniPool, m: float, fixed_rule: bool) -> ArbResult:
    bounds = arb_bounds(m, pool.gamma)
    target = _arb_target(pool.price, bounds, pool.gamma, fixed_rule)
    if target is None:
        return ArbResult("none", 0.0, 0.0, 0.0, 0.0, pool)
    idx, d = uni_swap_to_price(pool, target)
    if d <= 0:
        return ArbResult("none", 0.0, 0.0, 0.0, 0.0, pool)
    res, new_pool = uni_swap(pool, (d, 0.0) if idx == 0 else (0.0, d))
    side = "token1_in" if idx == 0 else "token2_in"
    out = res.received[1 - idx]
    profit = _profit(side, d, out, m)
    if profit < 0:
        return ArbResult("none", 0.0, 0.0, 0.0, 0.0, pool)
    return ArbResult(side, d, out, (1.0 - pool.gamma) * d, profit, new_pool)


def arb_step(pool, m: float, params: Rmm01Params | None = None, *, fixed_epsilon_rule: bool = False) -> ArbResult:
    """One arbitrage against external price ``m``.

    ``pool`` is an :class:`Rmm01State` (``params`` required) or a
    :class:`UniPool`.  Inside the no-arbitrage band nothing happens;
    otherwise the price is moved to the nearest band edge (or, with
    ``fixed_epsilon_rule``, by the fixed factor ``gamma`` or ``1/gamma``).
    Profit is the external value of the received basket minus the tendered one;
    a trade whose computed profit is negative is not executed.
    """
    if isinstance(pool, UniPool):
        return _arb_uni(pool, m, fixed_epsilon_rule)
    if params is None:
        raise TypeError("params are required for an RMM-01 state")
    return _arb_rmm(pool, params, m, fixed_epsilon_rule)


@dataclass(frozen=True)
class ReplicationRecord:
    t: float
    tau: float
    S: float
    p: float
    k: float
    lpt_value: float
    cc_value: float
    arb_side: str
    arb_in: float
    arb_out: float
    fees_cum: float
    profit: float = 0.0
    clipped: bool = False

    def csv_row(self) -> list[str]:
        return [
            fmt_float(self.t), fmt_float(self.tau), fmt_float(self.S), fmt_float(self.p),
            fmt_float(self.k), fmt_float(self.lpt_value), fmt_float(self.cc_value), self.arb_side,
            fmt_float(self.arb_in), fmt_float(self.arb_out), fmt_float(self.fees_cum),
        ]


@dataclass(frozen=True)
class ReplicationSummary:
    terminal_lpt_value: float
    terminal_payoff: float
    max_abs_k: float
    total_fees: float
    trades: int

    @property
    def terminal_gap(self) -> float:
        return self.terminal_lpt_value - self.terminal_payoff


@dataclass
class ReplicationReport:
    params: Rmm01Params
    gbm: GbmParams
    records: list[ReplicationRecord] = field(default_factory=list)

    @property
    def summary(self) -> ReplicationSummary:
        last = self.records[-1]
        return ReplicationSummary(
            terminal_lpt_value=last.lpt_value,
            terminal_payoff=min(last.S, self.params.strike),
            max_abs_k=max(abs(r.k) for r in self.records),
            total_fees=last.fees_cum,
            trades=sum(r.arb_side != "none" for r in self.records),
        )

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLICATION_COLUMNS)
        for r in self.records:
            w.writerow(r.csv_row())

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text


def run_replication(
    params: Rmm01Params,
    gbm: GbmParams,
    gamma: float | None = None,
    *,
    fixed_epsilon_rule: bool = False,
) -> ReplicationReport:
    """Simulate an arbitraged RMM-01 LP position along one GBM path.

    The pool starts on the ``k = 0`` curve at ``gbm.s0`` with the full
    maturity left.  Each step: time decay by ``gbm.dt``, the next path price,
    then one arbitrage.  When ``steps * dt`` reaches the maturity the last
    row sits exactly at expiry.  LPT values are marked at the external price.
    """
    if gamma is not None:
        params = replace(params, gamma=gamma)
    T = params.maturity
    horizon = gbm.steps * gbm.dt
    if horizon > T * (1.0 + 1e-9):
        raise DomainError(f"simulation horizon {horizon!r} exceeds the pool maturity {T!r}")
    reaches_expiry = abs(horizon - T) <= 1e-9 * max(T, 1.0)
    path = gbm_path(gbm)
    state = state_from_price(gbm.s0, params, T)
    report = ReplicationReport(params, gbm)
    fees_cum = 0.0

    def record(i: int, m: float, res: ArbResult | None) -> None:
        report.records.append(ReplicationRecord(
            t=float(path.times[i]), tau=state.tau, S=m, p=reported_price(state, params),
            k=state.invariant_k, lpt_value=lpt_value(state, params, price=m),
            cc_value=covered_call_at(m, params, state.tau),
            arb_side=res.side if res else "none", arb_in=res.tendered if res else 0.0,
            arb_out=res.received if res else 0.0, fees_cum=fees_cum,
            profit=res.profit if res else 0.0, clipped=res.clipped if res else False,
        ))

    record(0, float(path.prices[0]), None)
    for i in range(1, gbm.steps + 1):
        m = float(path.prices[i])
        try:
            dt = state.tau if (reaches_expiry and i == gbm.steps) else min(gbm.dt, state.tau)
            state = advance_time(state, params, dt)
            res = arb_step(state, m, params, fixed_epsilon_rule=fixed_epsilon_rule)
        except RmmError as exc:
            raise type(exc)(f"step {i}: {exc}") from exc
        state = res.state
        fees_cum += res.fee * m if res.side == "token1_in" else res.fee
        record(i, m, res)
    return report


def _terminal_gap(args: tuple[Rmm01Params, GbmParams]) -> float:
    params, gbm = args
    return run_replication(params, gbm).summary.terminal_gap


def replication_study(
    params: Rmm01Params,
    path_sigma: float,
    steps_list: list[int],
    seeds: list[int],
    *,
    s0: float | None = None,
    mu: float = 0.0,
    workers: int | None = None,
) -> dict[int, np.ndarray]:
    """Terminal gaps ``lpt_value - min(S_T, K)`` per step count, one entry per seed.

    Each run spans the full maturity with ``dt = maturity / steps``.  Seeds
    are paired across step counts.  Runs may fan out over processes;
    results are gathered in seed order so they do not depend on scheduling.
    """
    s0 = params.strike if s0 is None else s0
    out = {}
    for steps in steps_list:
        jobs = [
            (params, GbmParams(s0, mu, path_sigma, params.maturity / steps, steps, seed))
            for seed in seeds
        ]
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                gaps = list(ex.map(_terminal_gap, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
        else:
            gaps = [_terminal_gap(j) for j in jobs]
        out[steps] = np.asarray(gaps)
    return out


@dataclass(frozen=True)
class ImpactRow:
    r1: float
    tau: float
    sigma_sqrt_tau: float
    price: float
    threshold: float
    uni_derivative: float
    rmm_derivative: float
    rmm_dominates: bool


def on_curve_state(r1: float, params: Rmm01Params, tau: float) -> Rmm01State:
    """The ``k = 0`` state with Token1 reserve ``r1``."""
    K = params.strike
    if tau == 0:
        return make_state(Reserves(r1, K * (1.0 - r1)), params, 0.0)
    if not 0.0 < r1 < 1.0:
        raise DomainError(f"R1 must lie in (0, 1), got {r1!r}")
    a = -normal_quantile(r1) if r1 <= 0.5 else normal_quantile(1.0 - r1)
    return Rmm01State(Reserves(r1, K * normal_cdf(a - params.width(tau))), tau, 0.0)


def run_impact_comparison(strike: float, sigma: float, taus, r1s) -> list[ImpactRow]:
    """Infinitesimal price impact of RMM-01 vs a constant-product pool at the same price.

    ``rmm_dominates`` is ``sigma*sqrt(tau) < 2 pdf(Ninv(1 - R1))``.
    """
    taus, r1s = list(taus), list(r1s)
    if not taus or not r1s:
        raise DomainError("tau and R1 grids must be nonempty")
    params = Rmm01Params(strike, sigma, max(taus))
    rows = []
    for tau in taus:
        s = params.width(tau)
        for r1 in r1s:
            state = on_curve_state(r1, params, tau)
            p = reported_price(state, params)
            thr = uniswap_dominance_bound(r1)
            rows.append(ImpactRow(
                r1=r1, tau=tau, sigma_sqrt_tau=s, price=p, threshold=thr,
                uni_derivative=uni_directional_price_derivative(UniPool.at_price(p)),
                rmm_derivative=rmm_directional_price_derivative(state, params),
                rmm_dominates=s < thr,
            ))
    return rows


def finite_swap_impacts(r1: float, params: Rmm01Params, tau: float, rel_size: float = 1e-4) -> tuple[float, float]:
    """Price slopes along the invariant-curve tangents measured with real swaps.

    A central difference from one Token2-in and one Token1-in swap each of
    size ``rel_size`` (relative to the reserve, along each pool's tangent
    parameterisation).  Returns ``(uniswap, rmm01)``; fees are ignored.
    """
    fee_free = replace(params, gamma=1.0)
    state = on_curve_state(r1, fee_free, tau)
    p = reported_price(state, fee_free)
    # RMM-01 tangent (-1, p): step h in R1 directly
    h = rel_size * min(r1, 1.0 - r1)
    s = fee_free.width(tau)
    a_up = -normal_quantile(r1 - h) if r1 - h <= 0.5 else normal_quantile(1.0 - (r1 - h))
    a = -normal_quantile(r1) if r1 <= 0.5 else normal_quantile(1.0 - r1)
    d2 = fee_free.strike * (normal_cdf(a_up - s) - normal_cdf(a - s))
    p_up = swap_exact_token2_in(state, fee_free, d2).new_price
    p_down = swap_exact_token1_in(state, fee_free, h).new_price
    rmm_fd = (p_up - p_down) / (2.0 * h)
    # constant product tangent (-R1, R2): step rel_size * R1 in R1
    pool = UniPool.at_price(p)
    r1u, r2u = pool.reserves
    res_up, up = uni_swap(pool, (0.0, r2u * rel_size / (1.0 - rel_size)))
    res_dn, dn = uni_swap(pool, (rel_size * r1u, 0.0))
    uni_fd = (up.price - dn.price) / (2.0 * rel_size)
    return uni_fd, rmm_fd
