import math
from dataclasses import replace

import numpy as np
import pytest

from rmmkit.cfmm_core import Reserves
from rmmkit.errors import DomainError
from rmmkit.market_sim import (
    REPLICATION_COLUMNS,
    GbmParams,
    arb_bounds,
    arb_step,
    finite_swap_impacts,
    gbm_path,
    on_curve_state,
    replication_study,
    run_impact_comparison,
    run_replication,
)
from rmmkit.rmm01 import Rmm01Params, advance_time, make_state, reported_price, state_from_price
from rmmkit.uniswap_v2 import UniPool

P = Rmm01Params(2000.0, 0.8, 0.25)


def test_gbm_path_is_seeded_and_starts_at_s0():
    g = GbmParams(100.0, 0.05, 0.3, 0.01, 50, seed=7)
    a, b = gbm_path(g), gbm_path(g)
    assert np.array_equal(a.prices, b.prices)
    assert a.prices[0] == 100.0 and len(a) == 51
    assert not np.array_equal(a.prices, gbm_path(replace(g, seed=8)).prices)
    assert a.times[-1] == pytest.approx(0.5)


def test_gbm_zero_vol_is_deterministic_growth():
    path = gbm_path(GbmParams(100.0, 0.1, 0.0, 0.1, 10))
    assert path.prices[-1] == pytest.approx(100.0 * math.exp(0.1), rel=1e-12)


def test_gbm_log_returns_have_the_right_moments():
    g = GbmParams(1.0, 0.2, 0.5, 1e-3, 200_000, seed=1)
    r = np.diff(np.log(gbm_path(g).prices))
    # 200k draws: the sample mean has std 0.5*sqrt(1e-3)/sqrt(2e5) ~ 3.5e-5
    assert r.mean() == pytest.approx((0.2 - 0.125) * 1e-3, abs=2e-4)
    assert r.std() == pytest.approx(0.5 * math.sqrt(1e-3), rel=0.01)


@pytest.mark.parametrize("kw", [dict(s0=0.0), dict(dt=0.0), dict(steps=0), dict(sigma=-0.1)])
def test_gbm_validation(kw):
    base = dict(s0=1.0, mu=0.0, sigma=0.2, dt=0.1, steps=5)
    with pytest.raises(DomainError):
        GbmParams(**{**base, **kw})


def test_arb_bounds():
    b = arb_bounds(100.0, 0.99)
    assert b.lower == 99.0 and b.upper == pytest.approx(100.0 / 0.99)
    assert b.contains(100.0) and not b.contains(98.0)


@pytest.mark.parametrize("gamma", [1.0, 0.997])
@pytest.mark.parametrize("m", [1500.0, 1995.0, 2000.0, 2600.0])
def test_rmm_arb_lands_on_band_edge_with_nonnegative_profit(gamma, m):
    params = replace(P, gamma=gamma)
    st0 = state_from_price(2000.0, params, 0.2)
    res = arb_step(st0, m, params)
    b = arb_bounds(m, gamma)
    p = reported_price(res.state, params)
    assert b.lower * (1 - 1e-9) <= p <= b.upper * (1 + 1e-9)
    assert res.profit >= 0.0
    if b.contains(2000.0):
        assert not res.traded


def test_fixed_epsilon_rule_moves_by_fixed_factor():
    params = replace(P, gamma=0.99)
    st0 = state_from_price(2000.0, params, 0.2)
    res = arb_step(st0, 2500.0, params, fixed_epsilon_rule=True)
    assert reported_price(res.state, params) == pytest.approx(2000.0 / 0.99, rel=1e-9)


def test_uniswap_arb_lands_on_band_edge():
    pool = UniPool.at_price(2000.0, r1=10.0, gamma=0.997)
    res = arb_step(pool, 2300.0)
    assert res.state.price == pytest.approx(2300.0 * 0.997, rel=1e-9)
    assert res.profit > 0
    assert not arb_step(pool, 2001.0).traded


def test_rmm_arb_requires_params():
    with pytest.raises(TypeError):
        arb_step(state_from_price(2000.0, P, 0.2), 2000.0)


def test_arb_at_expiry_drains_one_side():
    st0 = make_state(Reserves(0.4, 1200.0), P, 0.0)
    up = arb_step(st0, 2500.0, P)
    assert up.side == "token2_in" and up.state.r1 == 0.0 and up.clipped
    dn = arb_step(st0, 1500.0, P)
    assert dn.side == "token1_in" and dn.state.r2 == 0.0 and dn.profit >= 0


def test_replication_report_shape_and_endpoints():
    g = GbmParams(2000.0, 0.0, 0.8, 0.25 / 200, 200, seed=3)
    rep = run_replication(P, g)
    assert len(rep.records) == 201
    first, last = rep.records[0], rep.records[-1]
    assert first.k == 0.0 and first.lpt_value == pytest.approx(first.cc_value, abs=1e-9 * 2000)
    assert last.tau == 0.0
    assert last.cc_value == min(last.S, 2000.0)
    text = rep.to_csv()
    assert text.splitlines()[0] == ",".join(REPLICATION_COLUMNS)
    assert text == run_replication(P, g).to_csv()
    assert "\r" not in text


def test_band_holds_unless_the_trade_hit_a_reserve_boundary():
    # flagged steps are where time decay left too little of one token to reach the band
    for seed in range(10):
        rep = run_replication(P, GbmParams(2000.0, 0.0, 0.8, 0.25 / 200, 200, seed))
        for rec in rep.records[1:]:
            if not rec.clipped:
                assert arb_bounds(rec.S, P.gamma).contains(rec.p, 1e-9)
            assert rec.profit >= 0.0


def test_replication_rejects_horizon_past_maturity():
    with pytest.raises(DomainError):
        run_replication(P, GbmParams(2000.0, 0.0, 0.8, 0.01, 100))


def test_zero_vol_path_only_time_decay_moves_the_invariant():
    # a flat external price: the curve still drifts with tau, so small trades happen every step
    g = GbmParams(2000.0, 0.0, 0.0, 0.25 / 100, 100)
    rep = run_replication(P, g)
    st_ = state_from_price(2000.0, P, 0.25)
    for rec in rep.records[1:-1]:
        assert rec.p == pytest.approx(2000.0, rel=1e-9)
        assert abs(rec.arb_in) < 0.01
    decayed = advance_time(st_, P, 0.25 / 100)
    assert rep.records[1].k == pytest.approx(decayed.invariant_k, rel=1e-12)


def test_fees_accumulate_with_gamma_below_one():
    g = GbmParams(2000.0, 0.0, 0.8, 0.25 / 100, 100, seed=1)
    rep = run_replication(P, g, gamma=0.997)
    fees = [r.fees_cum for r in rep.records]
    assert fees[-1] > 0 and all(b >= a for a, b in zip(fees, fees[1:]))


def test_replication_study_is_independent_of_worker_count():
    serial = replication_study(P, 0.8, [50], [0, 1, 2, 3])
    parallel = replication_study(P, 0.8, [50], [0, 1, 2, 3], workers=2)
    assert np.array_equal(serial[50], parallel[50])


def test_impact_comparison_flags_agree_with_derivatives():
    rows = run_impact_comparison(2000.0, 0.8, [0.25, 0.04, 0.0], [0.05, 0.3, 0.5, 0.7, 0.95])
    for r in rows:
        assert r.rmm_dominates == (r.rmm_derivative < r.uni_derivative)
        if r.tau == 0:
            assert r.price == 2000.0 and r.rmm_derivative == 0.0


@pytest.mark.parametrize("r1", [0.05, 0.5, 0.9])
def test_finite_swap_impacts_match_analytic(r1):
    rows = run_impact_comparison(2000.0, 0.8, [0.1], [r1])
    uni_fd, rmm_fd = finite_swap_impacts(r1, P, 0.1)
    assert uni_fd == pytest.approx(rows[0].uni_derivative, rel=1e-7)
    assert rmm_fd == pytest.approx(rows[0].rmm_derivative, rel=1e-7)


def test_on_curve_state_is_perfectly_replicating():
    st_ = on_curve_state(0.3, P, 0.1)
    assert st_.invariant_k == 0.0 and st_.r1 == 0.3
    with pytest.raises(DomainError):
        on_curve_state(1.0, P, 0.1)
