# %% [markdown]
# # An RMM-01 pool, step by step
#
# The pool holds R1 units of Token1 (risky) and R2 units of Token2 (numeraire)
# per unit of liquidity.  Its reserves are the Black-Scholes covered call:
# R1 is the chance of ending below the strike, R2 is the strike-weighted
# cash leg.  Run with ``python3 demos/01_pool_walkthrough.py``.

# %%
from rmmkit.gauss_bs import covered_call_value
from rmmkit.rmm01 import (
    Rmm01Params,
    advance_time,
    lpt_value,
    reported_price,
    state_from_price,
    swap_exact_token1_in,
    uniswap_dominance_bound,
)
from rmmkit.uniswap_v2 import UniPool, uni_price_impact

params = Rmm01Params(strike=2000.0, sigma=0.8, maturity=0.25, gamma=0.997)
state = state_from_price(2000.0, params, tau=0.25)
print("reserves at S=2000:", state.reserves)
print("reported price    :", reported_price(state, params))
print("LPT value         :", lpt_value(state, params))
print("covered call      :", covered_call_value(2000.0, params.option(0.25)))

# %% [markdown]
# ## Selling Token1 into the pool
#
# The fee share of the input is set aside; the rest moves along the curve.

# %%
q = swap_exact_token1_in(state, params, 0.01)
print(f"sold 0.01 Token1, received {q.received:.6f} Token2, fee {q.fee:.2e}")
print("new reported price:", q.new_price)

# %% [markdown]
# ## Price impact against a constant-product pool
#
# At equal reported price and equal Token1 reserves, the RMM-01 pool has
# less impact whenever sigma * sqrt(tau) is under 2 * pdf(quantile(1 - R1)).

# %%
uni = UniPool.at_price(2000.0, r1=state.reserves.r1, gamma=params.gamma)
print("marginal price after the same trade, constant product:", uni_price_impact(uni, 0.01))
print("marginal price after the same trade, RMM-01          :", q.new_price)
print("dominance threshold at this R1  :", uniswap_dominance_bound(state.reserves.r1))
print("sigma * sqrt(tau)               :", params.width(0.25))

# %% [markdown]
# ## Time decay
#
# With reserves held fixed, the curve shifts as maturity approaches: the
# invariant k drifts, which is the pool paying away time value.

# %%
s = state
for _ in range(5):
    s = advance_time(s, params, 0.02)
    print(f"tau={s.tau:.2f}  k={s.invariant_k:+.4f}  price={reported_price(s, params):.2f}")
