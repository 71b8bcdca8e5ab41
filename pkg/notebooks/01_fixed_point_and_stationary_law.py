# %% [markdown]
# # Fixed point and stationary age law
#
# Each device's age climbs deterministically up to the threshold, then resets
# with probability p*q per slot.  q comes from a one-dimensional root search.

# %%
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from adra import ProtocolConfig, g_eval, lemma_lower_bound, solve_success_probability
from adra import average_aoi_adra, stationary_distribution

cfg = ProtocolConfig(n_devices=10, cap=0.15, threshold=5)

# %% [markdown]
# g is increasing between the lower bound ((N-2)/N)^(N-1) and 1, so bisection
# cannot miss the root.

# %%
qs = np.linspace(lemma_lower_bound(10), 1.0, 400)
sol = solve_success_probability(cfg)
print(sol)

fig, ax = plt.subplots()
ax.plot(qs, g_eval(cfg, qs))
ax.axhline(0, color="k", lw=0.5)
ax.axvline(sol.q, ls="--")
ax.set_xlabel("q")
ax.set_ylabel("g(q)")
fig.savefig("g_curve.png", dpi=120)

# %% [markdown]
# The stationary law is flat up to the threshold and geometric after it.

# %%
dist = stationary_distribution(cfg, sol)
ages = np.arange(1, 60)
print("mass check:", dist.total_mass())
print("average AoI:", average_aoi_adra(cfg, sol).average_aoi)

fig, ax = plt.subplots()
ax.bar(ages, dist.pmf(ages))
ax.set_xlabel("age (slots)")
ax.set_ylabel("probability")
fig.savefig("stationary_pmf.png", dpi=120)
