"""
Closed forms for the scalar LQR (``b = 1``) in continuous time and under
forward-Euler discretization.

With ``x' = a x + u`` and ``u = -k x`` the policy cost and its derivative are

    p(k)    = (r k^2 + q) / (2 (k - a))
    l(k)    = 1 / (2 (k - a))
    dJ(k)   = 2 (r k - p) l

and the optimum is ``k* = a + sqrt(a^2 + q / r)`` with ``p* = r k*``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import NumericalError, StabilityError


@dataclass(frozen=True)
class ScalarCt:
    a: float
    q: float = 1.0
    r: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.b != 1.0:
            raise ValueError(
                "b is fixed to 1; rescale the input (u -> b u) and r (r -> r / b^2) instead"
            )
        if self.q <= 0 or self.r <= 0:
            raise ValueError("q and r must be positive")

    @property
    def kstar(self):
        return self.a + np.sqrt(self.a**2 + self.q / self.r)

    @property
    def pstar(self):
        return self.r * self.kstar

    def gap(self, k):
        """``J(k) - J*`` in the cancellation-free form ``r (k - k*)^2 l(k)``."""
        _check_ct(self, k)
        return self.r * (k - self.kstar) ** 2 / (2.0 * (k - self.a))


@dataclass(frozen=True)
class ScalarDt:
    """Euler discretization with step ``h``, ``Q_d = h q`` and ``R_d = h r``."""

    ct: ScalarCt
    h: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")

    @property
    def interval(self):
        """Open interval of stabilizing gains, ``(a, (2 + h a) / h)``."""
        return self.ct.a, (2.0 + self.h * self.ct.a) / self.h


@dataclass(frozen=True)
class CtForms:
    p: float
    ell: float
    grad: float
    grad_fraction: float
    kstar: float
    pstar: float


def _check_ct(sys, k):
    if not k > sys.a:
        raise StabilityError(f"k={k} is not stabilizing (needs k > a={sys.a})",
                             abscissa=sys.a - k)


def ct_closed_forms(sys, k):
    """Cost, Lyapunov multiplier and derivative at gain ``k``.

    ``grad_fraction`` is the same derivative written as the single fraction
    ``(r k^2 - 2 a r k - q) / (2 (k - a)^2)``; it agrees with ``grad``.
    """
    _check_ct(sys, k)
    a, q, r = sys.a, sys.q, sys.r
    p = (r * k * k + q) / (2.0 * (k - a))
    ell = 1.0 / (2.0 * (k - a))
    grad = 2.0 * (r * k - p) * ell
    frac = -(2.0 * r * k * (a - k) + (r * k * k + q)) / (2.0 * (a - k) ** 2)
    return CtForms(p=p, ell=ell, grad=grad, grad_fraction=frac,
                   kstar=sys.kstar, pstar=sys.pstar)


def rate(sys, k):
    """``m(k) = dJ(k)^2 / (J(k) - J*)``; NaN at ``k = k*``."""
    gap = sys.gap(k)
    if gap <= 0.0:
        return float("nan")
    return ct_closed_forms(sys, k).grad ** 2 / gap


@dataclass(frozen=True)
class RateProfile:
    k: np.ndarray
    grad_sq: np.ndarray
    m: np.ndarray


def rate_profile(sys, k_grid):
    """Squared derivative and best exponential rate ``m`` over a gain grid."""
    k_grid = np.asarray(k_grid, dtype=float)
    grad_sq = np.empty_like(k_grid)
    m = np.empty_like(k_grid)
    for i, k in enumerate(k_grid):
        grad_sq[i] = ct_closed_forms(sys, k).grad ** 2
        m[i] = rate(sys, k)
    return RateProfile(k=k_grid, grad_sq=grad_sq, m=m)


@dataclass(frozen=True)
class ExpansionCheck:
    """Exact values next to near-optimum expansions written without constants.

    ``*_formula`` entries evaluate ``r l e^2``, ``l (r e - delta)`` and
    ``r l (l^2 e^2 - 2 l e + 1)`` with ``l = l(k* + eps)``; ``gap_formula_lstar`` uses
    ``l(k*)`` instead. The ratios ``grad_factor`` and ``m_factor`` expose
    the missing constants (2 and 4).
    """

    eps: float
    ell: float
    ell_star: float
    gap: float
    gap_formula: float
    gap_formula_lstar: float
    grad: float
    grad_formula: float
    m: float
    m_formula: float

    @property
    def residuals(self):
        return {
            "gap": abs(self.gap - self.gap_formula),
            "gap_lstar": abs(self.gap - self.gap_formula_lstar),
            "grad": abs(self.grad - self.grad_formula),
            "m": abs(self.m - self.m_formula) if np.isfinite(self.m) else float("nan"),
        }

    @property
    def grad_factor(self):
        return self.grad / self.grad_formula if self.grad_formula else float("nan")

    @property
    def m_factor(self):
        return self.m / self.m_formula if np.isfinite(self.m) else float("nan")


def expansion_check(sys, eps):
    ks = sys.kstar
    k = ks + eps
    forms = ct_closed_forms(sys, k)
    ell = forms.ell
    ell_star = 1.0 / (2.0 * (ks - sys.a))
    r = sys.r
    delta = ell * r * eps**2
    return ExpansionCheck(
        eps=eps,
        ell=ell,
        ell_star=ell_star,
        gap=sys.gap(k),
        gap_formula=delta,
        gap_formula_lstar=ell_star * r * eps**2,
        grad=forms.grad,
        grad_formula=ell * (-delta + r * eps),
        m=rate(sys, k) if eps != 0 else float("nan"),
        m_formula=r * ell * (ell**2 * eps**2 - 2.0 * ell * eps + 1.0),
    )


# -- discrete time -----------------------------------------------------------

@dataclass(frozen=True)
class DtForms:
    p_d: float
    grad_d: float
    m_d: float


def _check_dt(sys, k):
    lo, hi = sys.interval
    if not lo < k < hi:
        raise StabilityError(f"k={k} outside the stabilizing interval ({lo}, {hi})")


def dt_cost(sys, k):
    _check_dt(sys, k)
    a, q, r, h = sys.ct.a, sys.ct.q, sys.ct.r, sys.h
    acl = 1.0 + h * (a - k)
    return h * (r * k * k + q) / (1.0 - acl * acl)


def dt_grad(sys, k):
    _check_dt(sys, k)
    a, q, r, h = sys.ct.a, sys.ct.q, sys.ct.r, sys.h
    acl = 1.0 + h * (a - k)
    num = h * (r * k * k + q)
    den = 1.0 - acl * acl
    # d(acl)/dk = -h, so d(den)/dk = 2 h acl
    return (2.0 * h * r * k * den - num * 2.0 * h * acl) / den**2


def _grid(lo, hi, n, offset):
    w = hi - lo
    return np.linspace(lo + offset * w, hi - offset * w, n)


def _golden_min(f, lo, hi, n_scan=200, offset=1e-9, tol=1e-12):
    """Grid scan followed by golden-section refinement around the best point."""
    ks = _grid(lo, hi, n_scan, offset)
    vals = np.array([f(k) for k in ks])
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))
    if i == 0 or i == len(ks) - 1:
        return ks[i], vals[i], False
    res = minimize_scalar(f, bracket=(ks[i - 1], ks[i], ks[i + 1]), method="golden",
                          tol=tol)
    if not (ks[i - 1] <= res.x <= ks[i + 1]) or res.fun > vals[i]:
        return ks[i], vals[i], False
    return float(res.x), float(res.fun), True


def dt_optimum(sys):
    """``(k_d*, p_d*)`` by golden-section minimization of the DT cost."""
    lo, hi = sys.interval
    k, p, ok = _golden_min(lambda k: dt_cost(sys, k), lo, hi)
    if not ok:
        raise NumericalError("DT cost minimum not bracketed inside the interval")
    return k, p


def dt_closed_forms(sys, k, pstar=None):
    if pstar is None:
        pstar = dt_optimum(sys)[1]
    p = dt_cost(sys, k)
    g = dt_grad(sys, k)
    gap = p - pstar
    m = g * g / gap if gap > 0 else float("nan")
    return DtForms(p_d=p, grad_d=g, m_d=m)


@dataclass(frozen=True)
class DtSweep:
    h: np.ndarray
    kd_min: np.ndarray
    md_min: np.ndarray
    refined: np.ndarray


def dt_min_rate(sys, n_scan=200):
    """Minimizer and minimum of ``m_d(., h)`` over the stabilizing interval.

    Returns ``(k, m, refined)``; ``refined`` is False when golden-section
    could not improve the grid minimum and the grid value is reported.
    """
    _, pstar = dt_optimum(sys)
    lo, hi = sys.interval

    def m_d(k):
        return dt_closed_forms(sys, k, pstar).m_d

    return _golden_min(m_d, lo, hi, n_scan=n_scan)


def dt_rate_sweep(ct, h_grid):
    hs = np.asarray(h_grid, dtype=float)
    if np.any(hs <= 0):
        raise ValueError("step sizes must be positive")
    ks, ms, flags = [], [], []
    for h in hs:
        k, m, ok = dt_min_rate(ScalarDt(ct, float(h)))
        if not ok:
            warnings.warn(f"m_d minimum for h={h} not refined; reporting grid minimum",
                          RuntimeWarning, stacklevel=2)
        ks.append(k)
        ms.append(m)
        flags.append(ok)
    return DtSweep(h=hs, kd_min=np.array(ks), md_min=np.array(ms), refined=np.array(flags))


def mirror_gain(sys, k):
    """The gain on the other side of ``k*`` with the same gap as ``k``."""
    ks = sys.kstar
    if k == ks:
        return ks
    target = sys.gap(k)
    if k > ks:
        lo, hi = sys.a + 1e-15 * max(1.0, abs(sys.a)), ks
        if sys.gap(lo) < target:
            raise ValueError(f"no gain left of k* reaches gap {target}")
    else:
        lo, hi = ks, ks + 1.0
        while sys.gap(hi) < target:
            hi = ks + 2.0 * (hi - ks)
    return brentq(lambda x: sys.gap(x) - target, lo, hi, xtol=1e-15, rtol=1e-15)
