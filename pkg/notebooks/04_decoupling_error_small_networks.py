# %% [markdown]
# # How good is the constant-q assumption?
#
# For three devices the joint chain over all age vectors can be solved
# exactly.  Comparing it with the decoupled formula shows the approximation
# error where it should be largest.

# %%
from adra import ProtocolConfig, average_aoi_adra, exact_small_n_average_aoi
from adra import solve_success_probability

for p, delta in [(0.2, 1), (0.4, 3), (0.5, 5), (0.6, 8)]:
    cfg = ProtocolConfig(3, p, delta)
    exact = exact_small_n_average_aoi(cfg)
    approx = average_aoi_adra(cfg, solve_success_probability(cfg)).average_aoi
    print(f"p={p} delta={delta}: exact {exact.average_aoi:.4f}  decoupled {approx:.4f}  "
          f"error {(approx - exact.average_aoi) / exact.average_aoi:+.2%}  (cap {exact.age_cap})")
