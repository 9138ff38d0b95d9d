"""
Empirical gradient-dominance certification.

Given samples of optimality gap ``r = f(x) - f_min`` and gradient norm
``|grad f(x)|``, this module estimates which lower bound ``|grad f| >= alpha(r)``
the data are consistent with:

* global: ``alpha(r) = sqrt(mu r)`` with one ``mu`` everywhere,
* saturating: ``alpha(r) = sqrt(a r / (b + r))``,
* semi-global only: a positive ``mu`` on every bounded sublevel set but
  ``alpha`` vanishing for large gaps,
* local only: the bound fails somewhere away from the minimum (e.g. a
  spurious critical point).

It also certifies linear-then-exponential decay of a gradient-flow
trajectory. All verdicts are "consistent with": sampling can only
overestimate an infimum.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import CertificationError

MIN_GAP = 1e-14
A_BOX = (1e-8, 1e4)
B_BOX = (1e-8, 1e6)


# -- comparison functions ----------------------------------------------------

@dataclass(frozen=True)
class SqrtMu:
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    def __call__(self, r):
        return np.sqrt(self.mu * np.asarray(r, dtype=float))


@dataclass(frozen=True)
class Ksat:
    """``alpha(r) = sqrt(a r / (b + r))``: increasing, saturating at ``sqrt(a)``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.sqrt(self.a * r / (self.b + r))

    @property
    def limit(self):
        return float(np.sqrt(self.a))


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear ``alpha`` through ``(0, 0)`` and the given points."""

    r: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        al = np.asarray(self.alpha, dtype=float)
        if r.shape != al.shape or r.ndim != 1 or r.size == 0:
            raise ValueError("r and alpha must be 1-D arrays of equal length")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("r must be positive and strictly increasing")
        if np.any(al <= 0):
            raise ValueError("alpha must be positive for r > 0")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "alpha", al)

    def __call__(self, r):
        return np.interp(r, np.r_[0.0, self.r], np.r_[0.0, self.alpha])


def is_positive_definite(alpha, grid):
    """``alpha(0) == 0`` and ``alpha > 0`` on the positive grid points."""
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(alpha(grid[grid > 0]))
    return float(alpha(0.0)) == 0.0 and bool(np.all(vals > 0))


# -- reports -----------------------------------------------------------------

class Verdict(enum.Enum):
    GLOBAL = "ConsistentWithGlobal"
    KSAT = "ConsistentWithKsat"
    SEMI_GLOBAL = "ConsistentWithSemiGlobalOnly"
    LOCAL = "LocalOnly"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class KsatFit:
    a: float
    b: float
    residual: float
    saturated: bool

    @property
    def alpha(self):
        return Ksat(self.a, self.b)


@dataclass(frozen=True)
class PliReport:
    eps_grid: np.ndarray
    mu_hat: np.ndarray
    ksat: KsatFit | None
    verdict: Verdict
    envelope_gap: np.ndarray = field(repr=False)
    envelope_grad: np.ndarray = field(repr=False)
    tail_slope: float = float("nan")

    def to_csv(self):
        lines = ["eps,mu_hat"]
        for e, m in zip(self.eps_grid, self.mu_hat):
            lines.append(f"{format(float(e), '.17g')},{format(float(m), '.17g')}")
        return "\n".join(lines) + "\n"

    def sidecar(self):
        k = self.ksat
        return {
            "ksat": None if k is None else {"a": k.a, "b": k.b, "residual": k.residual,
                                            "saturated": k.saturated},
            "verdict": self.verdict.value,
        }


def _clean(gaps, grad_norms):
    gaps = np.asarray(gaps, dtype=float).ravel()
    grads = np.asarray(grad_norms, dtype=float).ravel()
    if gaps.shape != grads.shape:
        raise ValueError("gaps and grad_norms must have the same length")
    if np.any(gaps < 0):
        raise ValueError("gaps must be non-negative")
    keep = (gaps >= MIN_GAP) & np.isfinite(gaps) & np.isfinite(grads)
    order = np.argsort(gaps[keep], kind="stable")
    return gaps[keep][order], np.abs(grads[keep][order])


def default_eps_grid(max_gap, num=16):
    return np.geomspace(1e-3 * max_gap, max_gap, num)


def empirical_mu(gaps, grad_norms, eps_grid=None):
    """``(eps, mu_hat)``: smallest ``|grad|^2 / gap`` over samples with ``gap <= eps``.

    Grid points whose sublevel set contains no usable sample get NaN.
    """
    r, g = _clean(gaps, grad_norms)
    if r.size == 0:
        raise ValueError("no samples with positive gap")
    eps = default_eps_grid(r[-1]) if eps_grid is None else np.asarray(eps_grid, dtype=float)
    if np.any(np.diff(eps) <= 0):
        raise ValueError("eps grid must be strictly increasing")
    # running minimum over samples sorted by gap
    running = np.minimum.accumulate(g * g / r)
    idx = np.searchsorted(r, eps, side="right") - 1
    mu = np.where(idx >= 0, running[np.maximum(idx, 0)], np.nan)
    return eps, mu


def lower_envelope(gaps, grad_norms, num_bins=32):
    """Per geometric gap bin, the sample with the smallest gradient norm."""
    r, g = _clean(gaps, grad_norms)
    if r.size == 0:
        return r, g
    if r[0] == r[-1]:
        return r[:1], g[:1]
    edges = np.geomspace(r[0], r[-1], num_bins + 1)
    which = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, num_bins - 1)
    er, eg = [], []
    for j in range(num_bins):
        sel = np.flatnonzero(which == j)
        if sel.size:
            i = sel[np.argmin(g[sel])]
            er.append(r[i])
            eg.append(g[i])
    return np.array(er), np.array(eg)


def _ksat_log_residual(log_a, log_b, r, y):
    return y - (log_a + np.log(r) - np.logaddexp(log_b, np.log(r)))


def fit_ksat(gaps, grad_norms, num_bins=32):
    """Fit ``alpha(r)^2 = a r / (b + r)`` to the lower envelope of the data.

    Least squares on ``log(alpha^2)``: a log-grid search over ``b`` (with the
    optimal ``a`` in closed form) is refined by ``scipy.optimize.least_squares``.
    Afterwards ``a`` is lowered, if needed, so that the fitted bound lies
    below every envelope point. Returns None when fewer than 3 envelope
    points exist or no valid ``a`` remains in the search box.
    """
    r, g = lower_envelope(gaps, grad_norms, num_bins)
    if r.size < 3 or np.any(g <= 0):
        return None
    y = np.log(g * g)
    lr = np.log(r)
    la_lo, la_hi = np.log(A_BOX)
    lb_lo, lb_hi = np.log(B_BOX)

    best = None
    for lb in np.linspace(lb_lo, lb_hi, 301):
        base = lr - np.logaddexp(lb, lr)
        la = float(np.clip(np.mean(y - base), la_lo, la_hi))
        res = float(np.sum((y - la - base) ** 2))
        cand = (res, la, lb)
        if best is None or cand[:2] < best[:2]:
            best = cand
    _, la0, lb0 = best
    sol = least_squares(lambda p: _ksat_log_residual(p[0], p[1], r, y), x0=[la0, lb0],
                        bounds=([la_lo, lb_lo], [la_hi, lb_hi]), xtol=1e-15, ftol=1e-15,
                        gtol=1e-15)
    la, lb = sol.x
    if np.sum(sol.fun ** 2) > best[0]:
        la, lb = la0, lb0
    b = float(np.exp(lb))
    a = min(float(np.exp(la)), float(np.min(g * g * (b + r) / r)))
    if a < A_BOX[0]:
        return None
    resid = _ksat_log_residual(np.log(a), np.log(b), r, y)
    saturated = bool(np.isclose(lb, lb_lo) or np.isclose(lb, lb_hi)
                     or np.isclose(la, la_hi))
    return KsatFit(a=a, b=b, residual=float(np.sqrt(np.mean(resid**2))), saturated=saturated)


DIP_RATIO = 0.05
TAIL_FRACTION = 0.1
SLOPE_THRESHOLD = 0.25


def _has_interior_dip(env_g):
    for j in range(1, len(env_g) - 1):
        ref = min(env_g[:j].max(), env_g[j + 1:].max())
        if env_g[j] < DIP_RATIO * ref:
            return True
    return False


def diagnose(gaps, grad_norms, eps_grid=None, num_bins=32):
    """Classify sampled ``(gap, |grad|)`` data into a :class:`Verdict`.

    Rules, in order: a vanishing gradient at positive gap or an interior
    dip of the lower envelope (a bin more than 20x below both flanks) means
    local only; otherwise the log-log slope of the envelope over gaps above
    a tenth of the largest decides (``> 0.25`` global, ``< -0.25``
    semi-global only, in between saturating when a valid fit exists).
    """
    r, g = _clean(gaps, grad_norms)
    if r.size == 0:
        raise ValueError("no samples with positive gap")
    eps, mu = empirical_mu(r, g, eps_grid)
    fit = fit_ksat(r, g, num_bins)
    env_r, env_g = lower_envelope(r, g, num_bins)

    def report(verdict, slope=float("nan")):
        return PliReport(eps_grid=eps, mu_hat=mu, ksat=fit, verdict=verdict,
                         envelope_gap=env_r, envelope_grad=env_g, tail_slope=slope)

    if env_r.size < 4:
        return report(Verdict.INCONCLUSIVE)
    if np.any(g <= 0) or _has_interior_dip(env_g):
        return report(Verdict.LOCAL)
    tail = env_r >= TAIL_FRACTION * r[-1]
    if tail.sum() < 2:
        return report(Verdict.INCONCLUSIVE)
    slope = float(np.polyfit(np.log(env_r[tail]), np.log(env_g[tail]), 1)[0])
    if slope > SLOPE_THRESHOLD:
        return report(Verdict.GLOBAL, slope)
    if slope < -SLOPE_THRESHOLD:
        return report(Verdict.SEMI_GLOBAL, slope)
    return report(Verdict.KSAT if fit is not None else Verdict.INCONCLUSIVE, slope)


# -- linear-exponential certificates -----------------------------------------

@dataclass(frozen=True)
class GlesCertificate:
    """Two-branch bound on a gap trajectory.

    Before ``t_split`` the gap lies below the line through
    ``(t_split, gap(t_split))`` with slope ``-slope``; afterwards it lies
    below ``gap(t_split) * exp(-rate (t - t_split))``.
    """

    t_split: float
    gap_split: float
    slope: float
    rate: float
    max_violation: float
    valid: bool

    def bound(self, t):
        t = np.asarray(t, dtype=float)
        lin = self.gap_split + self.slope * (self.t_split - t)
        exp = self.gap_split * np.exp(-self.rate * (t - self.t_split))
        return np.where(t <= self.t_split, lin, exp)


def certify_gles(t, gap, grad_norm, split_fraction=0.1, slope_slack=1e-3):
    """Fit and check a linear-then-exponential bound on a decreasing gap.

    The split is the first sample with ``gap <= split_fraction * gap(0)``.
    The slope is the least-squares slope of the line anchored at the split,
    raised if needed to the steepest chord into the split so the line is an
    upper bound. The rate is the anchored least-squares rate of ``log gap``,
    lowered if needed to the smallest exponent that keeps the exponential
    above the samples. The certificate is valid when both constants are
    positive, the bound holds up to ``1e-6 * gap(0)`` and the slope does not
    exceed the largest observed ``|grad|^2`` (the gap decreases at rate
    ``|grad|^2``, so no honest slope can).

    Raises
    ------
    CertificationError
        Fewer than 10 samples, increasing gap, zero initial gap, or no
        sample inside or after the split sublevel set.
    """
    t = np.asarray(t, dtype=float)
    gap = np.asarray(gap, dtype=float)
    grad_norm = np.asarray(grad_norm, dtype=float)
    if t.size < 10:
        raise CertificationError(f"need at least 10 samples, got {t.size}")
    g0 = gap[0]
    if not g0 > 0:
        raise CertificationError("initial gap must be positive")
    if np.any(np.diff(gap) > 1e-10 * max(1.0, g0)):
        raise CertificationError("gap is not monotonically non-increasing")
    inside = np.flatnonzero(gap <= split_fraction * g0)
    if inside.size == 0:
        raise CertificationError("trajectory never enters the split sublevel set")
    s = int(inside[0])
    ts, gs = t[s], gap[s]

    dt_pre = ts - t[:s]
    dg_pre = gap[:s] - gs
    m_ls = float(np.sum(dt_pre * dg_pre) / np.sum(dt_pre**2))
    m = max(m_ls, float(np.max(dg_pre / dt_pre)))

    post = np.flatnonzero((t > ts) & (gap > 0))
    if post.size == 0:
        raise CertificationError("no positive-gap samples after the split")
    dt_post = t[post] - ts
    dl_post = np.log(gap[post] / gs)
    mu_ls = float(-np.sum(dt_post * dl_post) / np.sum(dt_post**2))
    mu = min(mu_ls, float(np.min(-dl_post / dt_post)))

    cert = GlesCertificate(t_split=float(ts), gap_split=float(gs), slope=m, rate=mu,
                           max_violation=0.0, valid=False)
    viol = float(np.max(gap - cert.bound(t)))
    sup_sq = float(np.max(grad_norm[: s + 1] ** 2))
    valid = (m > 0 and mu > 0 and viol <= 1e-6 * g0 and m <= sup_sq * (1 + slope_slack))
    return GlesCertificate(t_split=float(ts), gap_split=float(gs), slope=m, rate=mu,
                           max_violation=max(viol, 0.0), valid=bool(valid))


def certify_trajectory(traj, **kwargs):
    return certify_gles(traj.t, traj.gap, traj.grad_norm, **kwargs)


# -- synthetic costs ---------------------------------------------------------

@dataclass(frozen=True)
class ZooCost:
    """A scalar cost with known minimum value and gradient-dominance class."""

    name: str
    f: object
    grad: object
    f_min: float
    span: float
    truth: Verdict
    note: str = ""

    def sample(self, num=4001, span=None):
        """Gaps and gradient norms on a uniform grid over ``[-span, span]``."""
        span = self.span if span is None else span
        xs = np.linspace(-span, span, num)
        gaps = np.array([self.f(x) for x in xs]) - self.f_min
        grads = np.abs(np.array([self.grad(x) for x in xs]))
        return xs, np.maximum(gaps, 0.0), grads


def quadratic(mu=1.0):
    return ZooCost(
        name=f"quadratic(mu={mu:g})",
        f=lambda x: 0.5 * mu * x * x,
        grad=lambda x: mu * x,
        f_min=0.0,
        span=10.0,
        truth=Verdict.GLOBAL,
        note="|grad|^2 = 2 mu gap",
    )


def _ksat_gap(x):
    # invert x = sqrt(g (g + 1)) + asinh(sqrt(g)), the solution of g'^2 = g / (1 + g)
    ax = abs(float(x))
    if ax == 0.0:
        return 0.0

    def h(g):
        return np.sqrt(g * (g + 1.0)) + np.arcsinh(np.sqrt(g)) - ax

    return brentq(h, 0.0, ax * ax + ax + 1.0, xtol=1e-300, rtol=1e-15, maxiter=500)


def saturating():
    def grad(x):
        g = _ksat_gap(x)
        return np.sign(x) * np.sqrt(g / (1.0 + g))

    return ZooCost(
        name="saturating",
        f=_ksat_gap,
        grad=grad,
        f_min=0.0,
        span=100.0,
        truth=Verdict.KSAT,
        note="|grad|^2 = gap / (1 + gap) exactly (a = b = 1)",
    )


def log_quadratic():
    return ZooCost(
        name="log1p_square",
        f=lambda x: np.log1p(x * x),
        grad=lambda x: 2.0 * x / (1.0 + x * x),
        f_min=0.0,
        span=1000.0,
        truth=Verdict.SEMI_GLOBAL,
        note="gradient vanishes at infinity while the gap grows",
    )


def double_well():
    return ZooCost(
        name="double_well",
        f=lambda x: x * x * ((x - 2.0) ** 2 + 0.25),
        grad=lambda x: 2.0 * x * ((x - 2.0) ** 2 + 0.25) + 2.0 * x * x * (x - 2.0),
        f_min=0.0,
        span=4.0,
        truth=Verdict.LOCAL,
        note="spurious local minimum near x = 1.854 with gap about 0.93",
    )


def zoo_examples():
    """One synthetic cost per class, keyed by name."""
    costs = [quadratic(1.0), saturating(), log_quadratic(), double_well()]
    return {c.name: c for c in costs}


def diagnose_cost(cost, num=4001, span=None, **kwargs):
    _, gaps, grads = cost.sample(num, span)
    return diagnose(gaps, grads, **kwargs)
