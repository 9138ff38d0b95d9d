# %% [markdown]
# # The scalar LQR landscape
#
# For the plant x' = a x + u with feedback u = -k x, the cost J(k) of the
# closed loop has a closed form on the stabilizing set k > a. This script
# walks through it for a = q = r = 1.

# %%
import numpy as np

from pli_lab import lqr, scalar

unit = scalar.ScalarCt(1.0)
print(f"optimal gain k* = {unit.kstar:.12f}  (1 + sqrt 2 = {1 + np.sqrt(2):.12f})")
print(f"optimal cost J* = {unit.pstar:.12f}")

# %% [markdown]
# The matrix machinery (Lyapunov solves, Newton-Kleinman) agrees with the
# closed forms.

# %%
prob = lqr.LqrProblem.scalar(1.0)
for k in (1.5, 2.0, 5.0, 50.0):
    f = scalar.ct_closed_forms(unit, k)
    print(f"k={k:6.1f}  J={f.p:10.6f}  matrix J={lqr.cost(prob, [[k]]):10.6f}  dJ={f.grad:+.6f}")

# %% [markdown]
# How strong is gradient dominance at each gain? The ratio
# m(k) = dJ(k)^2 / (J(k) - J*) is the local exponential rate of the flow.
# It blows up at the stability boundary, tends to sqrt(2) at the optimum and
# vanishes for large gains, because dJ stays below 1/2 while the gap grows.

# %%
ks = np.array([1.001, 1.01, 1.1, 2.0, unit.kstar + 1e-4, 5.0, 20.0, 200.0])
prof = scalar.rate_profile(unit, ks)
for k, g2, m in zip(prof.k, prof.grad_sq, prof.m):
    print(f"k={k:9.4f}  dJ^2={g2:12.6g}  m={m:12.6g}")

# %% [markdown]
# Near the optimum, with e = k - k*, the gap is exactly r l(k) e^2. The
# gradient and rate expansions carry factors 2 and 4 in front of l;
# `expansion_check` evaluates them next to the exact values.

# %%
for eps in (1e-2, 1e-3):
    chk = scalar.expansion_check(unit, eps)
    print(f"eps={eps:g}  gap residual={chk.residuals['gap']:.1e}  "
          f"grad factor={chk.grad_factor:.6f}  rate factor={chk.m_factor:.6f}")
