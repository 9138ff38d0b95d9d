# %% [markdown]
# # No global gradient dominance: high-gain curves
#
# If J had |grad J|^2 >= mu (J - J*) everywhere, the ratio
# |grad J| / sqrt(gap) would stay bounded below along any path to infinity.
# This script follows two kinds of paths for the double integrator and
# prints the ratio.

# %%
import numpy as np

from pli_lab import highgain
from pli_lab.lqr import LqrProblem

A = [[0.0, 1.0], [0.0, 0.0]]
B = [[0.0], [1.0]]
prob = LqrProblem(A, B, np.eye(2), np.eye(1))
rhos = highgain.default_rho_grid()

# %% [markdown]
# Pole placement with both poles at -rho (Ackermann's formula) gives
# K = [rho^2, 2 rho]. The gradient grows like rho^2 / 8, faster than the
# square root of the gap, so the ratio increases along this curve.

# %%
study = highgain.curve_limit_study(highgain.HighGainCurve.build(prob), rhos)
for row in study.rows()[::3]:
    print("rho={:9.1f}  gap={:12.5g}  |grad|={:12.5g}  ratio={:9.4f}".format(*row))

# %% [markdown]
# Along a ray K = rho [1, 1] the gradient levels off at a finite value while
# the gap keeps growing, so the ratio goes to zero: no single mu works.

# %%
ray = highgain.RayCurve(prob, [[1.0, 1.0]])
study = highgain.curve_limit_study(ray, rhos)
for row in study.rows()[::3]:
    print("rho={:9.1f}  gap={:12.5g}  |grad|={:12.5g}  ratio={:9.4f}".format(*row))
