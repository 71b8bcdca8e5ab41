# %% [markdown]
# # Simulation against the decoupled model
#
# N = 50 with p = 2/N, threshold N and with p = 1.5/N, threshold N/2.

# %%
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from adra import CapPolicy, ProtocolConfig, SimConfig, run
from adra import solve_success_probability, stationary_distribution

N = 50
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, (p, delta) in zip(axes, [(2 / N, N), (1.5 / N, N // 2)]):
    cfg = ProtocolConfig(N, p, delta)
    sol = solve_success_probability(cfg)
    dist = stationary_distribution(cfg, sol)
    rep = run(N, CapPolicy.adra(delta, p), SimConfig(horizon=10**6, seed=7, pmf_cap=400))
    ages = np.arange(1, 401)
    ax.plot(ages, dist.pmf(ages), label="analysis")
    ax.plot(ages, rep.empirical_pmf[1:], ".", ms=2, label="simulation")
    ax.set_title(f"p={p:.3f}, delta={delta}")
    ax.set_xlabel("age")
    ax.legend()
    print(f"p={p:.3f} delta={delta}: q analytic {sol.q:.4f}, empirical {rep.conditional_success_rate:.4f}")
fig.savefig("pmf_overlay.png", dpi=120)

# %% [markdown]
# Slotted ALOHA (threshold 1) is a sanity check: the closed form is exact.

# %%
rep = run(10, CapPolicy.aira(0.1), SimConfig(horizon=10**6, replications=4, seed=1))
print(f"simulated {rep.network_avg_aoi:.3f} +- {rep.avg_aoi_stderr:.3f}, closed form {1 / (0.1 * 0.9 ** 9):.3f}")
