"""
Gradient flow and scalar proximal gradient flow integration.

All flows are integrated with the Dormand-Prince 5(4) embedded pair. A
step is rejected and halved when the local error estimate is too large or
when any stage lands outside the domain of the cost (for LQR, outside the
set of stabilizing gains). The cost gap is non-increasing along every
gradient flow, and ``d(gap)/dt = -|grad|^2``.
"""

import csv
import enum
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import StabilityError
from .lqr import Gain, evaluate

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array(_A[6] + [0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4

# largest relative change of |grad|^2 over one accepted step, so the
# trapezoid rule over samples reproduces the dissipated cost to ~0.1%
_MAX_GRAD_SQ_CHANGE = 0.1


class Terminal(enum.Enum):
    CONVERGED = "Converged"
    MAX_TIME = "MaxTime"
    DOMAIN_EXIT = "DomainExit"
    STEP_FAILURE = "StepFailure"


@dataclass(frozen=True)
class FlowConfig:
    """Integration and stopping parameters.

    ``gap_tol=None`` means ``1e-10`` times the initial gap. Every accepted
    step is recorded and steps never cross a multiple of ``record_every``,
    so samples are at most ``record_every`` apart. Steps are also shortened
    until ``|grad|^2`` changes by at most 10% between samples.
    """

    max_time: float = 100.0
    gap_tol: float | None = None
    grad_tol: float = 1e-9
    rel_step_tol: float = 1e-8
    initial_step: float = 1e-3
    min_step: float = 1e-12
    record_every: float = 0.01

    def __post_init__(self):
        for name in ("max_time", "grad_tol", "rel_step_tol", "initial_step",
                     "min_step", "record_every"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.gap_tol is not None and not self.gap_tol > 0:
            raise ValueError("gap_tol must be positive")
        if not self.min_step < self.initial_step:
            raise ValueError("min_step must be smaller than initial_step")


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    gap: np.ndarray
    grad_norm: np.ndarray
    params: np.ndarray
    terminal: Terminal
    param_shape: tuple = field(default=())

    def __len__(self):
        return len(self.t)

    def param(self, i):
        return self.params[i].reshape(self.param_shape)

    def first_time_below(self, level):
        """Earliest sample time with ``gap <= level`` (``None`` if never)."""
        idx = np.flatnonzero(self.gap <= level)
        return float(self.t[idx[0]]) if idx.size else None

    def to_csv(self, fh=None):
        """Write ``t,gap,grad_norm,param_0,...`` with 17 significant digits.

        Returns the text when ``fh`` is None.
        """
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "gap", "grad_norm"]
                   + [f"param_{j}" for j in range(self.params.shape[1])])
        for i in range(len(self.t)):
            row = [self.t[i], self.gap[i], self.grad_norm[i], *self.params[i]]
            w.writerow([format(float(v), ".17g") for v in row])
        if own:
            return fh.getvalue()

    @classmethod
    def from_csv(cls, fh, terminal=Terminal.CONVERGED, param_shape=None):
        rows = list(csv.reader(fh))
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        params = data[:, 3:]
        return cls(t=data[:, 0], gap=data[:, 1], grad_norm=data[:, 2], params=params,
                   terminal=terminal,
                   param_shape=param_shape if param_shape is not None else (params.shape[1],))


def _dopri(stage, y0, cfg, param_shape, gap_rel=1e-10):
    """Adaptive Dormand-Prince integration of ``y' = f(y)``.

    ``stage(y)`` returns ``(f(y), gap, grad_norm)`` and raises
    StabilityError when ``y`` is outside the domain. Without an explicit
    ``cfg.gap_tol`` the gap tolerance is ``gap_rel`` times the initial gap
    (``gap_rel=None`` disables the gap test).
    """
    y = np.array(y0, dtype=float).ravel()
    f, gap, gnorm = stage(y)
    if cfg.gap_tol is not None:
        gap_tol = cfg.gap_tol
    elif gap_rel is not None:
        gap_tol = gap_rel * max(gap, 0.0)
    else:
        gap_tol = -np.inf

    ts, gaps, gnorms, ps = [0.0], [gap], [gnorm], [y.copy()]

    def done(gap, gnorm):
        return gap <= gap_tol or gnorm <= cfg.grad_tol

    t = 0.0
    h = min(cfg.initial_step, cfg.record_every)  # error-controlled step proposal
    last_rec = 0.0
    left_domain = False
    terminal = Terminal.MAX_TIME
    if done(gap, gnorm):
        terminal = Terminal.CONVERGED
    else:
        while True:
            if t >= cfg.max_time:
                terminal = Terminal.MAX_TIME
                break
            if h < cfg.min_step:
                terminal = Terminal.DOMAIN_EXIT if left_domain else Terminal.STEP_FAILURE
                break
            # never step past the next recording time
            step = min(h, last_rec + cfg.record_every - t, cfg.max_time - t)
            ks = [f]
            try:
                for i in range(1, 7):
                    yi = y + step * sum(a * k for a, k in zip(_A[i], ks))
                    fi, gap_i, gnorm_i = stage(yi)
                    ks.append(fi)
            except StabilityError:
                h, left_domain = 0.5 * step, True
                continue
            err_vec = step * sum(e * k for e, k in zip(_E, ks))
            scale = cfg.rel_step_tol * (np.maximum(np.abs(y), np.abs(yi)) + 1e-12)
            err = float(np.max(np.abs(err_vec) / scale))
            g2_old, g2_new = gnorm * gnorm, gnorm_i * gnorm_i
            too_coarse = abs(g2_new - g2_old) > _MAX_GRAD_SQ_CHANGE * max(g2_old, g2_new)
            if err > 1.0 or too_coarse:
                h, left_domain = 0.5 * step, False
                continue
            t += step
            y, f, gap, gnorm = yi, ks[6], gap_i, gnorm_i
            stop = done(gap, gnorm)
            ts.append(t)
            gaps.append(gap)
            gnorms.append(gnorm)
            ps.append(y.copy())
            if t >= last_rec + cfg.record_every * (1 - 1e-9):
                last_rec = t
            if stop:
                terminal = Terminal.CONVERGED
                break
            if step == h:
                h *= 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
    return Trajectory(t=np.array(ts), gap=np.array(gaps), grad_norm=np.array(gnorms),
                      params=np.array(ps), terminal=terminal, param_shape=param_shape)


def integrate_gradient_flow(prob, K0, cfg=None):
    """Integrate ``K' = -grad J(K)`` from a stabilizing ``K0``."""
    cfg = cfg or FlowConfig()
    g0 = Gain.of(prob, K0)
    if not g0.stabilizing:
        raise StabilityError("K0 is not stabilizing", abscissa=-g0.margin)
    J_star = prob.optimum[1]
    shape = (prob.m, prob.n)

    def stage(y):
        ev = evaluate(prob, y.reshape(shape), optimal_cost=J_star)
        return -ev.grad.ravel(), ev.gap, ev.grad_norm

    return _dopri(stage, g0.K, cfg, shape)


def integrate_cost_flow(f, grad, x0, cfg=None, f_min=0.0, domain=None):
    """Gradient flow ``x' = -grad(x)`` for an arbitrary smooth cost.

    ``domain(x)`` may return False to mark points outside the feasible set;
    such stages are rejected like non-stabilizing gains.
    """
    cfg = cfg or FlowConfig()
    x0 = np.asarray(x0, dtype=float)
    shape = x0.shape

    def stage(y):
        x = y.reshape(shape)
        if domain is not None and not domain(x):
            raise StabilityError("left the domain")
        g = np.asarray(grad(x), dtype=float)
        return -g.ravel(), float(f(x)) - f_min, float(np.linalg.norm(g))

    return _dopri(stage, x0, cfg, shape)


def soft_threshold(z):
    """Proximal map of ``|.|``: ``sign(z) * max(|z| - 1, 0)``."""
    return np.sign(z) * np.maximum(np.abs(z) - 1.0, 0.0)


def integrate_prox_flow_scalar(gradf, x0, cfg=None, f=None, f_opt=None):
    """Proximal gradient flow ``x' = -x + prox(x - f'(x))`` for ``f(x) + |x|``.

    The recorded gap is ``F(x) - f_opt`` with ``F = f + |.|`` when both
    ``f`` and ``f_opt`` are given, ``F(x)`` minus the best value reached on
    the trajectory when only ``f`` is given, and the fixed-point residual
    ``|x'|`` otherwise.
    ``grad_norm`` is always ``|x'|``. Unless ``cfg.gap_tol`` is set, only
    the residual stops the flow: near a nondegenerate equilibrium the gap is
    quadratic in the distance, so a relative gap test would stop early.
    """
    cfg = cfg or FlowConfig()

    def stage(y):
        x = float(y[0])
        dx = -x + float(soft_threshold(x - gradf(x)))
        res = abs(dx)
        if f is None:
            gap = res
        else:
            gap = float(f(x)) + abs(x) - (f_opt if f_opt is not None else 0.0)
        return np.array([dx]), gap, res

    traj = _dopri(stage, [float(x0)], cfg, (), gap_rel=None)
    if f is not None and f_opt is None:
        traj = replace(traj, gap=traj.gap - traj.gap.min())
    return traj


def instantaneous_rate(traj):
    """``(t, grad_norm^2 / gap)`` at samples with a positive gap."""
    mask = traj.gap > 0
    return traj.t[mask], traj.grad_norm[mask] ** 2 / traj.gap[mask]
