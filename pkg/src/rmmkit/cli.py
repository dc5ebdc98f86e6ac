"""``rmmkit`` command line front end.

Every subcommand reads an optional JSON scenario file, runs one analysis and
writes a CSV table (comma separated, header row, LF line endings, floats
with 17 significant digits) to ``--out`` or stdout.  Output depends only on
the configuration and the seed.

Exit codes: 0 success, 2 configuration error, 3 domain error during a run.

Example configuration (every key optional)::

    {
      "pool": {"strike": 2000, "sigma": 0.8, "maturity": 0.25, "gamma": 1.0},
      "s0": 2000,
      "gbm": {"mu": 0.0, "sigma": 0.8, "steps": 500},
      "grids": {"taus": [0.25, 0.1, 0.0], "prices": [1000, 2000, 4000],
                "r1s": [0.1, 0.5, 0.9], "swap_sizes": [0.001, 0.01, 0.1],
                "epsilons": [-0.1, 0.0, 0.1], "collateral": [0.9, 1.0]},
      "seed": 0,
      "out": null
    }
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from rmmkit.cfmm_core import Reserves
from rmmkit.composability import (
    check_liquidation,
    enter_synthetic_call,
    enter_synthetic_put,
    put_offset,
    value_synthetic_call,
    value_synthetic_put,
)
from rmmkit.errors import ConfigError, RmmError
from rmmkit.gauss_bs import call_value, put_value
from rmmkit.market_sim import (
    REPLICATION_COLUMNS,
    GbmParams,
    finite_swap_impacts,
    fmt_float,
    run_impact_comparison,
    run_replication,
)
from rmmkit.rmm01 import (
    Rmm01Params,
    Rmm01State,
    advance_time,
    covered_call_at,
    lpt_value,
    make_state,
    manipulation_delta1,
    manipulation_delta2,
    reported_price,
    state_from_price,
    swap_exact_token1_in,
    swap_exact_token2_in,
    uniswap_dominance_bound,
)
from rmmkit.uniswap_v2 import UniPool, uni_swap, uni_swap_to_price

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

_DEFAULT_GRIDS = {
    "taus": [0.25, 0.1, 0.01, 0.0],
    "prices": [500.0, 1000.0, 1500.0, 2000.0, 2500.0, 4000.0, 8000.0],
    "r1s": [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99],
    "swap_sizes": [0.001, 0.01, 0.1],
    "epsilons": [-0.2, -0.1, -0.05, -0.01, 0.0, 0.01, 0.05, 0.1, 0.2],
    "collateral": [0.9, 1.0, 1.5],
}


# ---------------------------------------------------------------- config


def _number(section: str, key: str, v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{section}.{key} must be a finite number, got {v!r}")
    return float(v)


def _number_list(key: str, v: Any, check: Callable[[float], bool], what: str) -> tuple[float, ...]:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"grids.{key} must be a nonempty list")
    out = tuple(_number("grids", key, x) for x in v)
    bad = [x for x in out if not check(x)]
    if bad:
        raise ConfigError(f"grids.{key} entries must be {what}, got {bad[0]!r}")
    return out


def _section(raw: dict, name: str, allowed: set[str]) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{name} must be an object")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    return sec


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: pool, initial price, GBM settings, grids, seed, output path."""

    strike: float = 2000.0
    sigma: float = 0.8
    maturity: float = 0.25
    gamma: float = 1.0
    s0: float = 2000.0
    mu: float = 0.0
    path_sigma: float = 0.8
    steps: int = 500
    taus: tuple[float, ...] = tuple(_DEFAULT_GRIDS["taus"])
    prices: tuple[float, ...] = tuple(_DEFAULT_GRIDS["prices"])
    r1s: tuple[float, ...] = tuple(_DEFAULT_GRIDS["r1s"])
    swap_sizes: tuple[float, ...] = tuple(_DEFAULT_GRIDS["swap_sizes"])
    epsilons: tuple[float, ...] = tuple(_DEFAULT_GRIDS["epsilons"])
    collateral: tuple[float, ...] = tuple(_DEFAULT_GRIDS["collateral"])
    seed: int = 0
    out: str | None = None
    params: Rmm01Params = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "params", Rmm01Params(self.strike, self.sigma, self.maturity, self.gamma))
            GbmParams(self.s0, self.mu, self.path_sigma, self.dt, self.steps, self.seed)
        except RmmError as exc:
            raise ConfigError(str(exc)) from None
        if self.maturity <= 0:
            raise ConfigError("pool.maturity must be positive")
        bad = [t for t in self.taus if not 0.0 <= t <= self.maturity]
        if bad:
            raise ConfigError(f"grids.taus entries must lie in [0, maturity], got {bad[0]!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")

    @property
    def dt(self) -> float:
        return self.maturity / self.steps if isinstance(self.steps, int) and self.steps > 0 else float("nan")

    @property
    def gbm(self) -> GbmParams:
        return GbmParams(self.s0, self.mu, self.path_sigma, self.dt, self.steps, self.seed)

    @classmethod
    def from_mapping(cls, raw: Any) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - {"pool", "s0", "gbm", "grids", "seed", "out"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        kw: dict[str, Any] = {}
        pool = _section(raw, "pool", {"strike", "sigma", "maturity", "gamma"})
        for key in ("strike", "sigma", "maturity", "gamma"):
            if key in pool:
                kw[key] = _number("pool", key, pool[key])
        if "s0" in raw:
            kw["s0"] = _number("config", "s0", raw["s0"])
        gbm = _section(raw, "gbm", {"mu", "sigma", "steps"})
        if "mu" in gbm:
            kw["mu"] = _number("gbm", "mu", gbm["mu"])
        if "sigma" in gbm:
            kw["path_sigma"] = _number("gbm", "sigma", gbm["sigma"])
        if "steps" in gbm:
            steps = gbm["steps"]
            if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
                raise ConfigError(f"gbm.steps must be a positive integer, got {steps!r}")
            kw["steps"] = steps
        grids = _section(raw, "grids", set(_DEFAULT_GRIDS))
        checks = {
            "taus": (lambda x: x >= 0, "nonnegative"),
            "prices": (lambda x: x > 0, "positive"),
            "r1s": (lambda x: 0 < x < 1, "in (0, 1)"),
            "swap_sizes": (lambda x: x > 0, "positive"),
            "epsilons": (lambda x: x > -1, "greater than -1"),
            "collateral": (lambda x: x > 0, "positive"),
        }
        for key, (check, what) in checks.items():
            if key in grids:
                kw[key] = _number_list(key, grids[key], check, what)
        if "seed" in raw:
            kw["seed"] = raw["seed"]
        if "out" in raw:
            if raw["out"] is not None and not isinstance(raw["out"], str):
                raise ConfigError("out must be a path string or null")
            kw["out"] = raw["out"]
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_mapping(raw)


# ---------------------------------------------------------------- tables


@dataclass
class Table:
    columns: Sequence[str]
    rows: list[list[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        self.rows.append(list(values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def _pool_state(S: float, params: Rmm01Params, tau: float) -> Rmm01State:
    """``k = 0`` state at price ``S``; at expiry, the maturity-``T`` pool at ``S`` run down to ``tau = 0``."""
    if tau > 0:
        return state_from_price(S, params, tau)
    return advance_time(state_from_price(S, params, params.maturity), params, params.maturity)


def cmd_price(cfg: ScenarioConfig) -> Table:
    """Reported price, reserves, LPT value and covered call on the (tau, S) grid."""
    params = cfg.params
    t = Table(["tau", "S", "r1", "r2", "k", "p", "lpt_value", "cc_value"])
    K = params.strike
    for tau in cfg.taus:
        for S in cfg.prices:
            if tau > 0:
                state = state_from_price(S, params, tau)
            else:
                # expiry limit of the k = 0 curve: all Token1 below K, all Token2 above
                r = Reserves(1.0, 0.0) if S < K else Reserves(0.0, K)
                state = make_state(r, params, 0.0)
            t.add(tau, S, state.r1, state.r2, state.invariant_k, reported_price(state, params),
                  lpt_value(state, params, price=S), covered_call_at(S, params, tau))
    return t


def _uni_twin(state: Rmm01State, params: Rmm01Params) -> UniPool:
    """Constant-product pool with the same price and Token1 depth as ``state``."""
    return UniPool.at_price(reported_price(state, params), r1=state.r1, gamma=params.gamma)


def cmd_swap(cfg: ScenarioConfig) -> Table:
    """Swap quotes on both pools; Token2 sizes are the Token1 sizes times ``s0``."""
    params = cfg.params
    g = params.gamma
    t = Table(["tau", "side", "tendered", "rmm_received", "rmm_price_after", "rmm_fee",
               "uni_received", "uni_price_after", "uni_impact"])
    for tau in cfg.taus:
        state = _pool_state(cfg.s0, params, tau)
        uni = _uni_twin(state, params)
        r1, r2 = uni.reserves
        for size in cfg.swap_sizes:
            for side in ("token1_in", "token2_in"):
                if side == "token1_in":
                    d = size
                    q = swap_exact_token1_in(state, params, d)
                    res, after = uni_swap(uni, (d, 0.0))
                    uni_out = res.received[1]
                    impact = g * r1 * r2 / (r1 + g * d) ** 2
                else:
                    d = size * cfg.s0
                    q = swap_exact_token2_in(state, params, d)
                    res, after = uni_swap(uni, (0.0, d))
                    uni_out = res.received[0]
                    impact = g * r1 * r2 / (r2 + g * d) ** 2
                t.add(tau, side, d, q.received, q.new_price, q.fee, uni_out, after.price, impact)
    return t


def cmd_impact(cfg: ScenarioConfig) -> Table:
    """Infinitesimal price impact of both pools at equal price, analytic and from real swaps."""
    params = cfg.params
    t = Table(["tau", "r1", "sigma_sqrt_tau", "price", "uni_derivative", "rmm_derivative",
               "uni_fd", "rmm_fd", "rmm_dominates"])
    for row in run_impact_comparison(params.strike, params.sigma, cfg.taus, cfg.r1s):
        uni_fd = rmm_fd = None
        if row.tau > 0:
            uni_fd, rmm_fd = finite_swap_impacts(row.r1, params, row.tau)
        t.add(row.tau, row.r1, row.sigma_sqrt_tau, row.price, row.uni_derivative, row.rmm_derivative,
              uni_fd, rmm_fd, row.rmm_dominates)
    return t


def _uni_manipulation(uni: UniPool, epsilon: float) -> tuple[str, float]:
    if epsilon == 0:
        return "none", 0.0
    idx, d = uni_swap_to_price(uni, (1.0 + epsilon) * uni.price)
    return ("token1" if idx == 0 else "token2"), d


def cmd_manipulate(cfg: ScenarioConfig) -> Table:
    """Cost (per LPT) of moving the price by ``epsilon`` on both pools.  Expiry rows are
    omitted: the RMM-01 price is pinned at K there."""
    params = cfg.params
    t = Table(["tau", "epsilon", "price", "rmm_asset", "rmm_amount", "rmm_cost",
               "uni_asset", "uni_amount", "uni_cost"])
    skipped = [tau for tau in cfg.taus if tau == 0]
    if skipped:
        print("manipulate: tau = 0 rows omitted (price pinned at K)", file=sys.stderr)
    for tau in cfg.taus:
        if tau == 0:
            continue
        state = _pool_state(cfg.s0, params, tau)
        p = reported_price(state, params)
        uni = _uni_twin(state, params)
        for eps in cfg.epsilons:
            if eps < 0:
                asset, amount = "token1", manipulation_delta1(state, params, eps)
            elif eps > 0:
                asset, amount = "token2", manipulation_delta2(state, params, eps)
            else:
                asset, amount = "none", 0.0
            u_asset, u_amount = _uni_manipulation(uni, eps)
            t.add(tau, eps, p, asset, amount, amount * p if asset == "token1" else amount,
                  u_asset, u_amount, u_amount * p if u_asset == "token1" else u_amount)
    return t


def cmd_compare(cfg: ScenarioConfig) -> Table:
    """Dominance region: RMM-01 has less price impact iff ``sigma sqrt(tau) < 2 pdf(Ninv(1 - R1))``."""
    params = cfg.params
    t = Table(["r1", "threshold", "sigma_sqrt_tau", "tau", "dominates"])
    for r1 in cfg.r1s:
        thr = uniswap_dominance_bound(r1)
        for tau in cfg.taus:
            s = params.width(tau)
            t.add(r1, thr, s, tau, s < thr)
    return t


def cmd_replicate(cfg: ScenarioConfig, fixed_epsilon_rule: bool = False) -> Table:
    """One arbitraged replication run over the full maturity."""
    report = run_replication(cfg.params, cfg.gbm, fixed_epsilon_rule=fixed_epsilon_rule)
    s = report.summary
    print(
        f"replicate: seed={cfg.seed} steps={cfg.steps} terminal lpt_value={s.terminal_lpt_value:.6f} "
        f"payoff={s.terminal_payoff:.6f} gap/K={s.terminal_gap / cfg.strike:.6f} trades={s.trades}",
        file=sys.stderr,
    )
    t = Table(list(REPLICATION_COLUMNS))
    t.rows = [r.csv_row() for r in report.records]
    return t


def cmd_synth(cfg: ScenarioConfig) -> Table:
    """Synthetic positions entered at ``(s0, maturity)`` and valued on the (tau, S) grid.

    ``gap`` is the synthetic value minus the option value: ``(x + y - 1) S`` for the
    unadjusted call, 0 for the adjusted call, and the constant leg offset for the put.
    Put collateral is ``y * K`` Token2.
    """
    params = cfg.params
    K = params.strike
    entry = params.option(params.maturity)
    t = Table(["kind", "y", "tau", "S", "x", "exposure", "synthetic_value", "option_value",
               "gap", "liquidated", "never_liquidated"])
    for y in cfg.collateral:
        unadj = enter_synthetic_call(cfg.s0, entry, y, adjust=False)
        adj = replace(unadj, adjusted=True)
        put = enter_synthetic_put(cfg.s0, entry, y * K)
        for tau in cfg.taus:
            opt = params.option(tau)
            for S in cfg.prices:
                call = call_value(S, opt)
                for kind, pos in (("call_unadjusted", unadj), ("call_adjusted", adj)):
                    v = value_synthetic_call(pos, S, tau)
                    gap = (pos.x + pos.y - 1.0) * S if kind == "call_unadjusted" else 0.0
                    t.add(kind, y, tau, S, pos.x, pos.exposure, v, call, gap,
                          check_liquidation(pos, S, tau), y >= 1.0)
                t.add("put_adjusted", y * K, tau, S, put.x, put.legs, value_synthetic_put(put, S, tau),
                      put_value(S, opt), put_offset(put), check_liquidation(put, S, tau), False)
    return t


COMMANDS: dict[str, Callable[..., Table]] = {
    "price": cmd_price,
    "swap": cmd_swap,
    "impact": cmd_impact,
    "manipulate": cmd_manipulate,
    "compare": cmd_compare,
    "replicate": cmd_replicate,
    "synth": cmd_synth,
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmmkit", description="RMM-01 and CFMM analyses as CSV tables.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON scenario file")
    common.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")
    common.add_argument("--seed", type=int, metavar="N", help="override the configured seed")
    common.add_argument("--fixed-epsilon-rule", action="store_true",
                        help="arbitrage by the fixed factor gamma (or 1/gamma) instead of to the band edge")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip().splitlines()[0])
    return parser


def run(argv: Sequence[str] | None = None) -> str:
    """Parse ``argv``, run the command and return the CSV text (also written to the output)."""
    args = build_parser().parse_args(argv)
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.command == "replicate":
        table = cmd_replicate(cfg, fixed_epsilon_rule=args.fixed_epsilon_rule)
    else:
        table = COMMANDS[args.command](cfg)
    text = table.to_csv()
    out = args.out or cfg.out
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return text


def main(argv: Sequence[str] | None = None) -> int:
    try:
        run(argv)
    except ConfigError as exc:
        print(f"rmmkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RmmError as exc:
        print(f"rmmkit: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
