import math
import random
from dataclasses import replace

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from rmmkit.cfmm_core import ConstantSum, Reserves, Trade, apply_swap, check_swap, reported_price as cfmm_price
from rmmkit.errors import DomainError, LiquidityError, WrongDirectionError
from rmmkit.gauss_bs import covered_call_value, normal_pdf, normal_quantile
from rmmkit.rmm01 import (
    Rmm01Params,
    Rmm01Pool,
    Rmm01State,
    Rmm01TradingFunction,
    advance_time,
    coordinate,
    gradient_price,
    lpt_value,
    make_state,
    manipulation_delta1,
    manipulation_delta2,
    price_from_r1,
    reported_price,
    reserves_from_price,
    rmm_directional_price_derivative,
    rmm_tangent,
    state_from_price,
    swap_exact_token1_in,
    swap_exact_token2_in,
    swap_to_price,
    trading_function,
    uniswap_dominance_bound,
)

P = Rmm01Params(2000.0, 0.8, 0.25)


def test_params_validation():
    for kw in (dict(strike=0, sigma=1, maturity=1), dict(strike=1, sigma=-1, maturity=1),
               dict(strike=1, sigma=1, maturity=-1), dict(strike=1, sigma=1, maturity=1, gamma=1.5)):
        with pytest.raises(DomainError):
            Rmm01Params(**kw)


def test_at_the_money_reserves_match_high_precision():
    r = reserves_from_price(2000.0, P, 0.25)
    # d1 = s/2 = 0.2, d2 = -0.2
    assert r.r1 == pytest.approx(float(oracles.ncdf(-0.2)), rel=1e-15)
    assert r.r2 == pytest.approx(float(2000 * oracles.ncdf(-0.2)), rel=1e-15)
    assert trading_function(r, P, 0.25) == pytest.approx(0.0, abs=1e-12)


def test_reported_price_matches_gradient_ratio():
    for S in (300.0, 2000.0, 9000.0):
        st_ = state_from_price(S, P, 0.1)
        assert reported_price(st_, P) == pytest.approx(S, rel=1e-12)
        assert gradient_price(st_, P) == pytest.approx(S, rel=1e-12)
    # the reserves-only adapter reads the price from R1, so stay where 1 - R1 is well conditioned
    tf = Rmm01TradingFunction(P, 0.1)
    for S in (1200.0, 2000.0, 9000.0):
        assert cfmm_price(tf, reserves_from_price(S, P, 0.1)) == pytest.approx(S, rel=1e-12)


def test_lpt_value_is_covered_call_at_zero_invariant():
    for S in (500.0, 2000.0, 6000.0):
        st_ = state_from_price(S, P, 0.2)
        assert lpt_value(st_, P) == pytest.approx(covered_call_value(S, P.option(0.2)), abs=1e-9 * 2000)


def test_two_route_coordinate_handles_r1_rounding_to_one():
    st_ = state_from_price(400.0, P, 0.01)  # deep out of the money, short expiry
    assert st_.r1 == 1.0
    assert reported_price(st_, P) == pytest.approx(400.0, rel=1e-9)


def test_make_state_rejects_boundary_before_expiry():
    with pytest.raises(DomainError):
        make_state(Reserves(1.0, 0.0), P, 0.1)
    assert make_state(Reserves(1.0, 0.0), P, 0.0).invariant_k == 0.0


def test_price_from_r1_and_expiry_price():
    assert price_from_r1(0.3, P, 0.0) == 2000.0
    st_ = make_state(Reserves(0.3, 1400.0), P, 0.0)
    assert reported_price(st_, P) == 2000.0


def _random_state(rng, k_drift=True):
    K = math.exp(rng.uniform(math.log(50), math.log(5000)))
    sigma = rng.uniform(0.1, 1.5)
    tau = rng.uniform(0.02, 1.0)
    gamma = rng.choice([1.0, 0.997, 0.99, 0.95])
    params = Rmm01Params(K, sigma, 1.0, gamma)
    w = params.width(tau)
    a = rng.uniform(-2.5, 2.5)  # quantile coordinate, so 1 - R1 stays in [0.006, 0.994]
    state = state_from_price(K * math.exp(a * w - 0.5 * w * w), params, tau)
    if k_drift:
        state = advance_time(state, params, rng.uniform(0.0, 0.5) * tau)
    return params, state


def _feasible_swap(rng, state, params, tendered):
    """A random swap size, chosen by the price it would land on, halved until the pool can fill it."""
    if tendered == 0:
        d = manipulation_delta1(state, params, -rng.uniform(0.001, 0.7))
        fn = swap_exact_token1_in
    else:
        d = manipulation_delta2(state, params, rng.uniform(0.001, 2.0))
        fn = swap_exact_token2_in
    for _ in range(60):
        try:
            return d, fn(state, params, d)
        except (DomainError, LiquidityError):
            d *= 0.5
    raise AssertionError(f"no feasible swap found for {state}")


@pytest.mark.parametrize("seed", range(4))
def test_swaps_agree_with_bisection_oracle(seed):
    rng = random.Random(seed)
    for _ in range(15):
        params, state = _random_state(rng)
        s = params.width(state.tau)
        g = params.gamma
        d1, q = _feasible_swap(rng, state, params, 0)
        ref = oracles.rmm_swap_out(state.r1, state.r2, state.invariant_k, params.strike, s, g, d1, 0)
        assert abs(q.received - float(ref)) <= 1e-10 * params.strike
        d2, q = _feasible_swap(rng, state, params, 1)
        ref = oracles.rmm_swap_out(state.r1, state.r2, state.invariant_k, params.strike, s, g, d2, 1)
        assert abs(q.received - float(ref)) <= 1e-10


def test_swap_preserves_invariant_and_books_fee():
    params = replace(P, gamma=0.99)
    st0 = state_from_price(2100.0, params, 0.2)
    q = swap_exact_token1_in(st0, params, 0.05)
    assert q.new_state.invariant_k == st0.invariant_k
    assert q.new_state.fees == pytest.approx((0.01 * 0.05, 0.0))
    assert trading_function(q.new_state.reserves, params, 0.2) == pytest.approx(0.0, abs=1e-10)
    assert reported_price(q.new_state, params) == pytest.approx(q.new_price, rel=1e-12)
    assert q.new_state.r1 == pytest.approx(st0.r1 + 0.99 * 0.05, rel=1e-15)
    tf = Rmm01TradingFunction(params, 0.2)
    assert check_swap(tf, st0.reserves, Trade((0.05, 0.0), (0.0, q.received)), 0.99).valid


def test_token1_swap_lowers_price_token2_swap_raises_it():
    st0 = state_from_price(2000.0, P, 0.25)
    assert swap_exact_token1_in(st0, P, 0.01).new_price < 2000.0
    assert swap_exact_token2_in(st0, P, 10.0).new_price > 2000.0


def test_swaps_refuse_to_reach_the_boundary():
    st0 = state_from_price(2000.0, P, 0.25)
    with pytest.raises(DomainError):
        swap_exact_token1_in(st0, P, 1.0 - st0.r1)
    with pytest.raises(DomainError):
        swap_exact_token2_in(st0, P, 2000.0 - st0.r2)
    with pytest.raises(DomainError):
        swap_exact_token1_in(st0, P, -1.0)


def test_expiry_swaps_trade_at_strike_like_constant_sum():
    params = replace(P, gamma=0.997)
    st0 = make_state(Reserves(0.4, 1200.0), params, 0.0)
    q = swap_exact_token1_in(st0, params, 0.1)
    assert q.received == pytest.approx(0.997 * 2000.0 * 0.1, rel=1e-15)
    assert q.new_price == 2000.0
    cs = apply_swap(ConstantSum(2000.0, 1.0), st0.reserves, (0.1, 0.0), 0.997)
    assert cs.received[1] == pytest.approx(q.received, rel=1e-12)
    q2 = swap_exact_token2_in(st0, params, 100.0)
    assert q2.received == pytest.approx(0.997 * 100.0 / 2000.0, rel=1e-15)
    with pytest.raises(LiquidityError):
        swap_exact_token1_in(st0, params, 1.0)


@pytest.mark.parametrize("eps", [-0.2, -0.05, 0.01, 0.1])
@pytest.mark.parametrize("gamma", [1.0, 0.99])
def test_manipulation_round_trip(eps, gamma):
    params = replace(P, gamma=gamma)
    st0 = advance_time(state_from_price(1700.0, params, 0.25), params, 0.05)
    p0 = reported_price(st0, params)
    if eps < 0:
        q = swap_exact_token1_in(st0, params, manipulation_delta1(st0, params, eps))
    else:
        q = swap_exact_token2_in(st0, params, manipulation_delta2(st0, params, eps))
    assert reported_price(q.new_state, params) == pytest.approx((1 + eps) * p0, rel=1e-9)


def test_manipulation_edge_cases():
    st0 = state_from_price(2000.0, P, 0.25)
    assert manipulation_delta1(st0, P, 0.0) == 0.0
    assert manipulation_delta2(st0, P, 0.0) == 0.0
    with pytest.raises(WrongDirectionError):
        manipulation_delta1(st0, P, 0.1)
    with pytest.raises(WrongDirectionError):
        manipulation_delta2(st0, P, -0.1)
    with pytest.raises(DomainError):
        manipulation_delta1(st0, P, -1.0)


def test_manipulation_cost_scales_with_supply():
    pool1 = Rmm01Pool.at_price(P, 2000.0, supply=1.0)
    pool10 = Rmm01Pool.at_price(P, 2000.0, supply=10.0)
    a1, c1 = pool1.manipulation_cost(0.05)
    a10, c10 = pool10.manipulation_cost(0.05)
    assert a1 == a10 == "token2" and c10 == pytest.approx(10 * c1, rel=1e-15)


def test_directional_derivative_formula_and_tangent():
    st0 = state_from_price(2500.0, P, 0.16)
    s = P.width(0.16)
    a = normal_quantile(1 - st0.r1)
    assert rmm_directional_price_derivative(st0, P) == pytest.approx(2500.0 * s / normal_pdf(a), rel=1e-9)
    t = rmm_tangent(st0, P)
    assert t[0] == -1.0 and t[1] == pytest.approx(2500.0, rel=1e-12)
    h = 1e-6
    fd = (price_from_r1(st0.r1 - h, P, 0.16) - price_from_r1(st0.r1 + h, P, 0.16)) / (2 * h)
    assert rmm_directional_price_derivative(st0, P) == pytest.approx(fd, rel=1e-7)
    assert rmm_directional_price_derivative(make_state(Reserves(0.5, 1000.0), P, 0.0), P) == 0.0


def test_dominance_bound_values():
    assert uniswap_dominance_bound(0.5) == pytest.approx(2 / math.sqrt(2 * math.pi), abs=1e-15)
    assert uniswap_dominance_bound(0.2) == pytest.approx(uniswap_dominance_bound(0.8), rel=1e-14)
    with pytest.raises(DomainError):
        uniswap_dominance_bound(1.0)


def test_advance_time_keeps_reserves_and_moves_invariant():
    st0 = state_from_price(2200.0, P, 0.25)
    st1 = advance_time(st0, P, 0.05)
    assert st1.reserves == st0.reserves and st1.tau == pytest.approx(0.2)
    assert st1.invariant_k < 0  # reserves stay put while the curve drifts
    assert trading_function(st1.reserves, P, 0.2) == pytest.approx(st1.invariant_k, abs=1e-10)
    st_exp = advance_time(st0, P, 0.25)
    assert st_exp.tau == 0.0
    assert st_exp.invariant_k == pytest.approx(st0.r2 - 2000.0 * (1 - st0.r1), rel=1e-15)


@given(S=st.floats(100.0, 20000.0), target=st.floats(100.0, 20000.0), gamma=st.sampled_from([1.0, 0.997]))
@settings(max_examples=200, deadline=None)
def test_swap_to_price_reaches_target(S, target, gamma):
    params = replace(P, gamma=gamma)
    st0 = state_from_price(S, params, 0.1)
    q = swap_to_price(st0, params, target)
    if q is None:
        return
    assert not q.clipped
    assert reported_price(q.new_state, params) == pytest.approx(target, rel=1e-9)
    assert q.new_state.invariant_k == st0.invariant_k


def test_swap_to_price_clips_at_extreme_targets():
    st0 = state_from_price(2000.0, P, 0.25)
    q = swap_to_price(st0, P, 1e-200)
    assert q.clipped


def test_pool_liquidity_changes_keep_price_and_pro_rata_baskets():
    pool = Rmm01Pool.at_price(P, 2000.0, supply=4.0)
    p = pool.price
    basket = pool.add_liquidity(1.0)
    assert basket == pytest.approx(pool.per_lpt_basket())
    assert pool.price == p and pool.supply == 5.0
    out = pool.remove_liquidity(5.0)
    assert out == pytest.approx(tuple(5 * b for b in basket))
    with pytest.raises(LiquidityError):
        pool.remove_liquidity(1.0)


def test_pool_swaps_are_supply_scaled():
    a = Rmm01Pool.at_price(P, 2000.0, supply=1.0)
    b = Rmm01Pool.at_price(P, 2000.0, supply=8.0)
    assert b.swap_token1_in(0.08) == pytest.approx(8 * a.swap_token1_in(0.01), rel=1e-14)
    assert a.price == pytest.approx(b.price, rel=1e-14)
