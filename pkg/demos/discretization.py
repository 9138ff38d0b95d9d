# %% [markdown]
# # Sampled-data LQR: the discrete rate landscape
#
# Discretizing x' = x + u with forward Euler step h gives a discrete LQR
# problem whose stabilizing gains form the interval (1, 1 + 2/h). The
# discrete rate m_d(k) blows up at both ends, so it has an interior minimum.

# %%
import numpy as np

from pli_lab import scalar

unit = scalar.ScalarCt(1.0)
for h in (1.0, 0.1):
    dt = scalar.ScalarDt(unit, h)
    k_opt, p_opt = scalar.dt_optimum(dt)
    lo, hi = dt.interval
    print(f"h={h}: stabilizing interval ({lo:g}, {hi:g}), optimal gain {k_opt:.6f}")

# %% [markdown]
# As h shrinks the optimum approaches the continuous one, 1 + sqrt(2).

# %%
hs = [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
sweep = scalar.dt_rate_sweep(unit, hs)
for h, k_min, m_min in zip(sweep.h, sweep.kd_min, sweep.md_min):
    k_opt, _ = scalar.dt_optimum(scalar.ScalarDt(unit, h))
    print(f"h={h:5.2f}  k_opt={k_opt:.6f}  smallest rate {m_min:.6g} at k={k_min:.4f}")
print(f"continuous optimum {1 + np.sqrt(2):.6f}")
