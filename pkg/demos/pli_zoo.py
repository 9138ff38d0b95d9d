# %% [markdown]
# # Classifying gradient dominance from samples
#
# Four one-dimensional costs, one per class. Each is sampled on a grid and
# `diagnose` decides which lower bound |f'| >= alpha(gap) the samples are
# consistent with.

# %%
import numpy as np

from pli_lab import pli

for name, cost in pli.zoo_examples().items():
    rep = pli.diagnose_cost(cost)
    fit = rep.ksat
    fit_txt = "no fit" if fit is None else f"a={fit.a:.4g} b={fit.b:.4g} saturated={fit.saturated}"
    print(f"{name:16s} -> {rep.verdict.value:30s} tail slope {rep.tail_slope:+.3f}  {fit_txt}")
    print(f"{'':16s}    ({cost.note})")

# %% [markdown]
# `empirical_mu(eps)` is the best constant mu on the sublevel set
# {gap <= eps}. It stays at 2 mu for a quadratic and decays when the bound
# only holds semi-globally.

# %%
for name in ("quadratic(mu=1)", "log1p_square"):
    rep = pli.diagnose_cost(pli.zoo_examples()[name])
    pairs = [(e, m) for e, m in zip(rep.eps_grid, rep.mu_hat) if np.isfinite(m)]
    print(name, " ".join(f"{e:.3g}:{m:.3g}" for e, m in pairs[::4]))
