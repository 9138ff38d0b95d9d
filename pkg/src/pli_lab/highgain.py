"""
High-gain curves in the set of stabilizing gains.

A high-gain curve places every closed-loop pole at ``-rho``. As ``rho``
grows the cost diverges while the gradient settles to a finite limit, so
``|grad J| / sqrt(J - J*)`` tends to zero along the curve and no global
Polyak-Lojasiewicz constant can exist.
"""

import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from . import linalg
from .errors import (
    ControllabilityError,
    DimensionError,
    IllConditionedWarning,
    SearchError,
    StabilityError,
)
from .linalg import as_matrix
from .lqr import Gain, evaluate

COND_WARN = 1e12


def _char_poly_matches(M, rho, rtol=1e-6):
    """Check ``det(sI - M) == (s + rho)^n`` coefficient by coefficient.

    A pole of multiplicity n is defective, so its computed eigenvalues
    scatter by roughly eps^(1/n) * rho; the coefficients do not.
    """
    n = M.shape[0]
    got = np.real(np.poly(M))
    want = np.array([comb(n, i) * rho**i for i in range(n + 1)])
    return bool(np.all(np.abs(got - want) <= rtol * np.maximum(want, 1.0)))


def ackermann_gain(A, b, rho):
    """Single-input gain placing all poles of ``A - b k`` at ``-rho``.

    Ackermann's formula ``k = e_n^T C^{-1} Phi(A)`` with ``C`` the
    controllability matrix and ``Phi(A) = sum_i binom(n, i) rho^i A^(n-i)``.

    Returns
    -------
    k : (1, n) ndarray

    Raises
    ------
    ControllabilityError
        If ``(A, b)`` is not controllable.

    Warns
    -----
    IllConditionedWarning
        If the controllability matrix has condition number above 1e12.
    """
    A = as_matrix(A, "A")
    b = as_matrix(b, "b")
    n = A.shape[0]
    if b.shape != (n, 1):
        raise DimensionError(f"b must be {n}x1, got {b.shape}")
    if rho <= 0:
        raise ValueError("rho must be positive")
    C = linalg.controllability_matrix(A, b)
    # machine-precision rank test, so the conditioning warning band is reachable
    if linalg.rank(C, tol=n * np.finfo(float).eps) < n:
        raise ControllabilityError("(A, b) is not controllable")
    cond = np.linalg.cond(C)
    if cond > COND_WARN:
        warnings.warn(f"controllability matrix condition {cond:.2e}", IllConditionedWarning,
                      stacklevel=2)
    Phi = np.zeros((n, n))
    Ak = np.eye(n)
    # Ak runs over A^0 .. A^n; A^j pairs with rho^(n-j)
    for j in range(n + 1):
        Phi += comb(n, n - j) * rho ** (n - j) * Ak
        Ak = Ak @ A
    e_n = np.zeros((1, n))
    e_n[0, -1] = 1.0
    k = e_n @ np.linalg.solve(C, Phi)
    if _char_poly_matches(A - b @ k, rho):
        return k
    if _char_poly_matches(A + b @ k, rho):
        return -k
    raise StabilityError(f"pole placement at -{rho} could not be verified")


def multi_input_reduce(A, B, seed=0, max_draws=1000):
    """Find ``(F, v)`` such that ``(A - B F, B v)`` is controllable.

    Single-input systems pass through with ``F = 0`` and ``v = [[1]]``.
    Otherwise ``v`` is drawn uniformly on the unit sphere and ``F``
    uniformly in ``[-1, 1]``, seeded, until the pair is accepted.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n, m = B.shape
    if m == 1:
        return np.zeros((1, n)), np.ones((1, 1))
    if not linalg.is_controllable(A, B):
        raise ControllabilityError("(A, B) is not controllable")
    rng = np.random.default_rng(seed)
    for _ in range(max_draws):
        v = rng.standard_normal((m, 1))
        v /= np.linalg.norm(v)
        F = rng.uniform(-1.0, 1.0, size=(m, n))
        if linalg.is_controllable(A - B @ F, B @ v):
            return F, v
    raise SearchError(f"no controllable reduction in {max_draws} draws", seed=seed)


def stabilize(prob, seed=0):
    """A stabilizing gain with every closed-loop pole at ``-rho0``.

    ``rho0 = 1 + max(0, abscissa(A))``.
    """
    rho0 = 1.0 + max(0.0, linalg.spectral_abscissa(prob.A).abscissa)
    F, v = multi_input_reduce(prob.A, prob.B, seed=seed)
    k = ackermann_gain(prob.A - prob.B @ F, prob.B @ v, rho0)
    return Gain.of(prob, F + v @ k)


@dataclass(frozen=True, eq=False)
class HighGainCurve:
    """``rho -> F + v k(rho)`` with ``k(rho)`` from Ackermann's formula.

    With ``offset=True`` the curve is shifted by the optimal gain,
    ``K* + F + v k(rho)``; poles are then no longer exactly at ``-rho`` and
    stabilization is checked after the fact.
    """

    problem: object
    F: np.ndarray
    v: np.ndarray
    offset: bool = False

    @classmethod
    def build(cls, problem, seed=0, offset=False):
        F, v = multi_input_reduce(problem.A, problem.B, seed=seed)
        return cls(problem=problem, F=F, v=v, offset=offset)

    def __call__(self, rho):
        p = self.problem
        k = ackermann_gain(p.A - p.B @ self.F, p.B @ self.v, rho)
        K = self.F + self.v @ k
        if self.offset:
            K = K + p.optimum[0].K
        g = Gain.of(p, K)
        if not g.stabilizing:
            raise StabilityError(f"curve left the stabilizing set at rho={rho}",
                                 abscissa=-g.margin)
        return g

    def diagonalizable(self, rho, cond_max=1e10):
        """Whether ``B K(rho)`` has a well-conditioned eigenvector basis."""
        M = self.problem.B @ self(rho).K
        _, V = np.linalg.eig(M)
        return bool(np.linalg.cond(V) < cond_max)


@dataclass(frozen=True, eq=False)
class RayCurve:
    """``rho -> base + rho * direction``.

    Gains grow linearly with the unbounded closed-loop eigenvalues along a
    ray, unlike multiplicity-n pole placement where ``|K|`` grows like
    ``rho^n``. ``base`` defaults to zero.
    """

    problem: object
    direction: np.ndarray
    base: np.ndarray = None

    def __call__(self, rho):
        p = self.problem
        D = as_matrix(self.direction, "direction")
        K = rho * D if self.base is None else as_matrix(self.base, "base") + rho * D
        g = Gain.of(p, K)
        if not g.stabilizing:
            raise StabilityError(f"ray left the stabilizing set at rho={rho}",
                                 abscissa=-g.margin)
        return g


@dataclass(frozen=True)
class LimitStudy:
    rho: np.ndarray
    gap: np.ndarray
    grad_fro: np.ndarray
    ratio: np.ndarray

    def rows(self):
        return list(zip(self.rho, self.gap, self.grad_fro, self.ratio))


def default_rho_grid(lo=10.0, hi=1e4, num=12):
    return np.geomspace(lo, hi, num)


def curve_limit_study(curve, rho_grid=None):
    """Gap, gradient norm and ``|grad| / sqrt(gap)`` along a curve.

    ``curve`` is any callable ``rho -> Gain`` with a ``problem`` attribute
    (``HighGainCurve`` or ``RayCurve``).
    """
    if rho_grid is None:
        rho_grid = default_rho_grid()
    rho_grid = np.asarray(rho_grid, dtype=float)
    if np.any(np.diff(rho_grid) <= 0):
        raise ValueError("rho grid must be increasing")
    prob = curve.problem
    J_star = prob.optimum[1]
    gap, grad = [], []
    for rho in rho_grid:
        try:
            g = curve(rho)
        except StabilityError as exc:
            raise StabilityError(f"non-stabilizing evaluation at rho={rho}: {exc}",
                                 abscissa=exc.abscissa) from exc
        ev = evaluate(prob, g, optimal_cost=J_star)
        gap.append(ev.gap)
        grad.append(ev.grad_norm)
    gap = np.array(gap)
    grad = np.array(grad)
    return LimitStudy(rho=rho_grid, gap=gap, grad_fro=grad, ratio=grad / np.sqrt(gap))
