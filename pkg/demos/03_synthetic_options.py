# %% [markdown]
# # Options from LP tokens
#
# Borrow an LP token against collateral and sell it.  Because a covered
# call is the underlying minus a call, holding one unit of Token1 and
# owing one LP token is a long call.

# %%
import numpy as np

from rmmkit.composability import (
    enter_synthetic_call,
    enter_synthetic_put,
    put_offset,
    simulate_synthetic_call,
    value_synthetic_call,
    value_synthetic_put,
)
from rmmkit.gauss_bs import OptionParams, call_value, put_value
from rmmkit.market_sim import GbmParams, gbm_path

opt = OptionParams(strike=2000.0, sigma=0.8, tau=0.25)
raw = enter_synthetic_call(2000.0, opt, y=0.9, adjust=False)
adj = enter_synthetic_call(2000.0, opt, y=0.9, adjust=True)
print(f"sale proceeds x={raw.x:.4f} Token1, adjustment z={adj.z:+.4f}")

# %% [markdown]
# The unadjusted position misses the call by (x + y - 1) * S; the adjusted
# one tracks it exactly.

# %%
for S in (1000.0, 2000.0, 4000.0):
    c = call_value(S, opt.with_tau(0.1))
    print(f"S={S:6.0f} call={c:9.3f} raw={value_synthetic_call(raw, S, 0.1):9.3f} "
          f"adjusted={value_synthetic_call(adj, S, 0.1):9.3f}")

# %% [markdown]
# Puts work the same way with Token2 collateral.

# %%
put = enter_synthetic_put(2000.0, opt, y=2000.0)
print("put offset:", put_offset(put))
print("synthetic put vs put at S=1500:", value_synthetic_put(put, 1500.0, 0.1), put_value(1500.0, opt.with_tau(0.1)))

# %% [markdown]
# Losses on the unadjusted call are bounded by the posted collateral.

# %%
taus = np.linspace(0.25, 0.0, 251)
losses = []
for seed in range(50):
    prices = gbm_path(GbmParams(2000.0, 0.0, 1.2, 0.25 / 250, 250, seed)).prices
    _, _, loss = simulate_synthetic_call(prices, taus, opt, 0.9)
    losses.append(loss)
print(f"worst loss {max(losses):.2f} vs bound {0.9 * 2000.0:.2f}")
