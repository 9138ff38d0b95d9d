"""
Dense real linear algebra used by the LQR layer.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. The
helpers here add the validation and conventions the rest of the package
relies on: Hurwitz tests with a small dead zone, continuous-time Lyapunov
solves through Kronecker vectorization, and controllability checks.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError, StabilityError

#: abscissa values in [-HURWITZ_TOL, 0] are "marginal" and rejected by solvers
HURWITZ_TOL = 1e-9


def as_matrix(x, name="matrix"):
    """Return ``x`` as a finite 2-D float64 array (scalars become 1x1)."""
    m = np.array(x, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} has non-finite entries")
    return m


def _square(x, name):
    m = as_matrix(x, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a real square matrix and their largest real part."""

    eigenvalues: np.ndarray
    abscissa: float

    def is_hurwitz(self, tol=HURWITZ_TOL):
        return self.abscissa < -tol


def spectral_abscissa(M):
    """Eigenvalues and spectral abscissa of a square matrix.

    LAPACK's ``geev`` does the Hessenberg reduction and shifted QR sweeps;
    eigenvalues are returned sorted by (real, imag) so the output is
    deterministic for a given input.
    """
    M = _square(M, "M")
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge: {exc}") from exc
    ev = np.sort_complex(ev.astype(complex))
    return Spectrum(eigenvalues=ev, abscissa=float(np.max(ev.real)))


def is_hurwitz(M, tol=HURWITZ_TOL):
    return spectral_abscissa(M).is_hurwitz(tol)


def solve_lyapunov_ct(F, Q, transpose=False, hurwitz_tol=HURWITZ_TOL):
    """Solve the continuous-time Lyapunov equation.

    Parameters
    ----------
    F : (n, n) array_like
        Hurwitz matrix.
    Q : (n, n) array_like
        Symmetric right-hand side.
    transpose : bool
        If False solve ``F X + X F^T + Q = 0``; if True solve
        ``F^T X + X F + Q = 0``.

    Returns
    -------
    X : (n, n) ndarray
        The unique symmetric solution.

    Notes
    -----
    The equation is vectorized column-major as
    ``(I kron F + F kron I) vec(X) = -vec(Q)`` and solved densely, with one
    step of iterative refinement. Cost is O(n^6), fine for n <= 8.
    """
    F = _square(F, "F")
    Q = _square(Q, "Q")
    n = F.shape[0]
    if Q.shape != (n, n):
        raise DimensionError(f"Q has shape {Q.shape}, expected {(n, n)}")
    spec = spectral_abscissa(F)
    if not spec.is_hurwitz(hurwitz_tol):
        raise StabilityError(
            f"Lyapunov solve needs a Hurwitz matrix (abscissa {spec.abscissa:.3e})",
            abscissa=spec.abscissa,
        )
    G = F.T if transpose else F
    eye = np.eye(n)
    L = np.kron(eye, G) + np.kron(G, eye)
    rhs = -Q.reshape(-1, order="F")
    try:
        x = np.linalg.solve(L, rhs)
        x = x + np.linalg.solve(L, rhs - L @ x)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular Kronecker system: {exc}") from exc
    X = x.reshape(n, n, order="F")
    return 0.5 * (X + X.T)


def lyapunov_residual(F, X, Q, transpose=False):
    """Frobenius norm of the Lyapunov residual for the given convention."""
    F, X, Q = (as_matrix(m) for m in (F, X, Q))
    G = F.T if transpose else F
    return float(np.linalg.norm(G @ X + X @ G.T + Q))


def controllability_matrix(A, B):
    """``[B, AB, ..., A^(n-1) B]`` as an n x (n m) array."""
    A = _square(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B has {B.shape[0]} rows, A is {n}x{n}")
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def rank(M, tol=1e-9):
    """Numerical rank: singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M, "M")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def is_controllable(A, B, tol=1e-9):
    A = _square(A, "A")
    return rank(controllability_matrix(A, B), tol) == A.shape[0]
