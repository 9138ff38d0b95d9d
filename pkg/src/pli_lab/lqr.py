"""
Continuous-time LQR policy optimization.

For a controllable pair ``(A, B)`` and weights ``Q, R > 0`` the policy cost
of a stabilizing feedback ``u = -K x`` is ``J(K) = tr(P_K)`` with

    (A - BK)^T P_K + P_K (A - BK) + K^T R K + Q = 0,

which is the expected infinite-horizon cost for an initial state with
identity covariance. Its gradient is ``2 (R K - B^T P_K) Y_K`` where

    (A - BK) Y_K + Y_K (A - BK)^T + I = 0.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .errors import (
    ControllabilityError,
    DimensionError,
    NumericalError,
    SamplingError,
    StabilityError,
)
from .linalg import HURWITZ_TOL, as_matrix


@dataclass(frozen=True, eq=False)
class LqrProblem:
    """System and cost matrices of a CT-LQR problem.

    Construction validates shapes, symmetry and definiteness of ``Q`` and
    ``R``, and controllability of ``(A, B)``.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    hurwitz_tol: float = HURWITZ_TOL

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        Q = as_matrix(self.Q, "Q")
        R = as_matrix(self.R, "R")
        n, m = B.shape
        if A.shape != (n, n):
            raise DimensionError(f"A has shape {A.shape}, B has {n} rows")
        if Q.shape != (n, n):
            raise DimensionError(f"Q has shape {Q.shape}, expected {(n, n)}")
        if R.shape != (m, m):
            raise DimensionError(f"R has shape {R.shape}, expected {(m, m)}")
        for name, W in (("Q", Q), ("R", R)):
            if not np.allclose(W, W.T, rtol=1e-12, atol=1e-14):
                raise ValueError(f"{name} must be symmetric")
            if np.min(np.linalg.eigvalsh(W)) <= 0:
                raise ValueError(f"{name} must be positive definite")
        if not linalg.is_controllable(A, B):
            raise ControllabilityError("(A, B) is not controllable")
        for name, val in (("A", A), ("B", B), ("Q", Q), ("R", R)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def scalar(cls, a, q=1.0, r=1.0, b=1.0):
        return cls([[a]], [[b]], [[q]], [[r]])

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def gain(self, K):
        return Gain.of(self, K)

    @cached_property
    def optimum(self):
        """``(K*, J*)`` computed once per problem."""
        return optimal_gain(self)


@dataclass(frozen=True, eq=False)
class Gain:
    """A feedback matrix together with its closed-loop stability margin."""

    K: np.ndarray
    margin: float
    problem: LqrProblem = field(repr=False)

    @classmethod
    def of(cls, problem, K):
        if isinstance(K, Gain):
            K = K.K
        K = as_matrix(K, "K")
        if K.shape != (problem.m, problem.n):
            raise DimensionError(f"K has shape {K.shape}, expected {(problem.m, problem.n)}")
        K.setflags(write=False)
        spec = linalg.spectral_abscissa(problem.A - problem.B @ K)
        return cls(K=K, margin=-spec.abscissa, problem=problem)

    @property
    def stabilizing(self):
        return self.margin > self.problem.hurwitz_tol


@dataclass(frozen=True)
class LqrEval:
    cost: float
    gap: float
    grad: np.ndarray
    grad_norm: float
    P: np.ndarray
    Y: np.ndarray


def _gain(prob, K):
    g = K if isinstance(K, Gain) and K.problem is prob else Gain.of(prob, K)
    if not g.stabilizing:
        raise StabilityError(
            f"K is not stabilizing (closed-loop abscissa {-g.margin:.3e})",
            abscissa=-g.margin,
        )
    return g


def _lyapunov_pair(prob, K):
    Acl = prob.A - prob.B @ K
    P = linalg.solve_lyapunov_ct(Acl, K.T @ prob.R @ K + prob.Q, transpose=True,
                                 hurwitz_tol=prob.hurwitz_tol)
    Y = linalg.solve_lyapunov_ct(Acl, np.eye(prob.n), hurwitz_tol=prob.hurwitz_tol)
    return P, Y


def cost(prob, K):
    """``J(K) = tr(P_K)``; raises StabilityError for non-stabilizing K."""
    g = _gain(prob, K)
    Acl = prob.A - prob.B @ g.K
    P = linalg.solve_lyapunov_ct(Acl, g.K.T @ prob.R @ g.K + prob.Q, transpose=True,
                                 hurwitz_tol=prob.hurwitz_tol)
    return float(np.trace(P))


def gradient(prob, K):
    """Analytic gradient ``2 (R K - B^T P_K) Y_K`` (an m x n array)."""
    g = _gain(prob, K)
    P, Y = _lyapunov_pair(prob, g.K)
    return 2.0 * (prob.R @ g.K - prob.B.T @ P) @ Y


def evaluate(prob, K, optimal_cost=None):
    """Cost, gap, gradient and the two Lyapunov solutions in one pass.

    ``optimal_cost`` defaults to the (cached) Riccati optimum of ``prob``.
    """
    g = _gain(prob, K)
    P, Y = _lyapunov_pair(prob, g.K)
    grad = 2.0 * (prob.R @ g.K - prob.B.T @ P) @ Y
    J = float(np.trace(P))
    if optimal_cost is None:
        optimal_cost = prob.optimum[1]
    return LqrEval(cost=J, gap=J - optimal_cost, grad=grad,
                   grad_norm=float(np.linalg.norm(grad)), P=P, Y=Y)


def optimal_gain(prob, K0=None, tol=1e-12, max_iter=200):
    """Optimal gain and cost by Newton-Kleinman iteration.

    Each step evaluates the current policy (one Lyapunov solve) and
    improves it with ``K <- R^{-1} B^T P_K``. The iteration stops when the
    update is below ``tol`` relative to ``max(1, |K|_F)``; this is the
    stabilizing solution of ``A^T P + P A - P B R^{-1} B^T P + Q = 0``.

    Returns
    -------
    (Gain, float)
    """
    if K0 is None:
        from .highgain import stabilize

        try:
            K0 = stabilize(prob)
        except Exception as exc:
            raise ControllabilityError(f"no stabilizing seed: {exc}") from exc
    K = _gain(prob, K0).K
    Rinv_Bt = np.linalg.solve(prob.R, prob.B.T)
    for _ in range(max_iter):
        Acl = prob.A - prob.B @ K
        try:
            P = linalg.solve_lyapunov_ct(Acl, K.T @ prob.R @ K + prob.Q, transpose=True,
                                         hurwitz_tol=prob.hurwitz_tol)
        except StabilityError as exc:
            raise NumericalError("Newton-Kleinman left the stabilizing set") from exc
        K_next = Rinv_Bt @ P
        step = np.linalg.norm(K_next - K)
        K = K_next
        if step < tol * max(1.0, np.linalg.norm(K)):
            break
    else:
        raise NumericalError(f"Newton-Kleinman did not converge in {max_iter} steps")
    g = _gain(prob, K)
    return g, cost(prob, g)


def in_restricted_set(prob, K, delta):
    """True iff ``A - BK + delta I`` is Hurwitz (with the solver dead zone)."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    g = Gain.of(prob, K)
    return -g.margin < -delta - prob.hurwitz_tol


@dataclass(frozen=True)
class BoxSampler:
    """Gains drawn from the box ``low <= K <= high`` (entrywise).

    ``mode="grid"`` places ``count`` points on a tensor grid (``count`` is
    rounded down to a perfect power of the number of entries); ``"random"``
    draws them uniformly with a seeded generator.
    """

    low: object
    high: object
    count: int = 1000
    mode: str = "grid"
    seed: int = 0

    def points(self, shape):
        low = np.broadcast_to(np.asarray(self.low, dtype=float), shape).ravel()
        high = np.broadcast_to(np.asarray(self.high, dtype=float), shape).ravel()
        d = low.size
        if self.mode == "grid":
            per_axis = max(2, int(round(self.count ** (1.0 / d))))
            while per_axis ** d > self.count and per_axis > 2:
                per_axis -= 1
            axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(low, high)]
            mesh = np.meshgrid(*axes, indexing="ij")
            flat = np.stack([m.ravel() for m in mesh], axis=1)
        elif self.mode == "random":
            rng = np.random.default_rng(self.seed)
            flat = low + (high - low) * rng.random((self.count, d))
        else:
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        return [row.reshape(shape) for row in flat]


def restricted_gradient_bound(prob, delta, sampler):
    """Largest sampled ``|grad J|_F`` over gains in the delta-restricted set.

    This is an empirical lower estimate of the supremum, which is finite for
    every ``delta > 0``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    best = None
    for K in sampler.points((prob.m, prob.n)):
        g = Gain.of(prob, K)
        if not in_restricted_set(prob, g, delta):
            continue
        val = float(np.linalg.norm(gradient(prob, g)))
        best = val if best is None else max(best, val)
    if best is None:
        raise SamplingError("no sampled gain lies in the restricted set")
    return best
