# %% [markdown]
# # Proximal gradient flow with an l1 penalty
#
# For F(x) = (x - c)^2 / 2 + |x| the flow x' = -x + prox(x - f'(x)) has the
# soft-threshold of c as its unique equilibrium: 0 when |c| <= 1 and
# c - sign(c) otherwise.

# %%
from pli_lab import flow

for c in (0.0, 0.5, 3.0, -2.5):
    traj = flow.integrate_prox_flow_scalar(lambda x, c=c: x - c, 5.0)
    x_end = traj.params[-1, 0]
    print(f"center {c:+.1f}: x(t={traj.t[-1]:.2f}) = {x_end:+.9f}, "
          f"soft threshold = {float(flow.soft_threshold(c)):+.1f}, "
          f"residual {traj.grad_norm[-1]:.1e}")
