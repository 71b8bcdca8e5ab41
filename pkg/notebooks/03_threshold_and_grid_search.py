# %% [markdown]
# # Choosing the threshold and access probability
#
# A larger threshold thins out contention but makes each device wait longer
# before it may transmit.  The mean age is minimised somewhere in between.

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from adra import average_aoi_aira, optimize, sweep_delta

fig, ax = plt.subplots()
for n in (10, 20, 50):
    rows = sweep_delta(n, 1.5 / n, range(1, 5 * n + 1))
    ax.plot([r.delta for r in rows], [r.analytic_avg_aoi for r in rows], label=f"N={n}")
ax.set_xlabel("threshold")
ax.set_ylabel("average AoI")
ax.legend()
fig.savefig("aoi_vs_threshold.png", dpi=120)

# %% [markdown]
# Full grid search against slotted ALOHA at its best access probability 1/N.

# %%
for n in (10, 20, 50, 100):
    best = optimize(n)
    aira = average_aoi_aira(n, 1 / n).average_aoi
    print(f"N={n:4d}  ALOHA {aira:8.2f}   ADRA {best.best_avg_aoi:8.2f} "
          f"(p={best.best_p * n:.2f}/N, threshold={best.best_delta})")
