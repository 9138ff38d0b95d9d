import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad_vec
from scipy.linalg import expm, solve_continuous_lyapunov

from pli_lab import linalg
from pli_lab.errors import DimensionError, NumericalError, StabilityError


def test_as_matrix_shapes():
    assert linalg.as_matrix(3.0).shape == (1, 1)
    assert linalg.as_matrix([1, 2, 3]).shape == (3, 1)
    with pytest.raises(DimensionError):
        linalg.as_matrix(np.zeros((2, 2, 2)))
    with pytest.raises(NumericalError):
        linalg.as_matrix([[np.nan]])


def test_spectrum_of_companion_matrix_matches_polynomial_roots():
    coeffs = [1.0, 6.0, 11.0, 6.0]  # (s+1)(s+2)(s+3)
    C = np.zeros((3, 3))
    C[0] = -np.array(coeffs[1:])
    C[1, 0] = C[2, 1] = 1.0
    spec = linalg.spectral_abscissa(C)
    np.testing.assert_allclose(np.sort(spec.eigenvalues.real), np.sort(np.roots(coeffs).real),
                               atol=1e-10)
    assert spec.abscissa == pytest.approx(-1.0, abs=1e-10)
    assert spec.is_hurwitz()


def test_spectrum_is_sorted_and_deterministic():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((5, 5))
    a, b = linalg.spectral_abscissa(M), linalg.spectral_abscissa(M.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvalues, np.sort_complex(a.eigenvalues))


def test_hurwitz_dead_zone():
    assert not linalg.is_hurwitz(np.diag([-1.0, -1e-12]))
    assert linalg.is_hurwitz(np.diag([-1.0, -1e-6]))
    assert not linalg.is_hurwitz(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_lyapunov_scalar_closed_form():
    # f x + x f + q = 0  ->  x = -q / (2 f)
    X = linalg.solve_lyapunov_ct([[-2.0]], [[3.0]])
    assert X[0, 0] == pytest.approx(0.75)


def test_lyapunov_both_conventions_against_scipy():
    rng = np.random.default_rng(3)
    F = rng.standard_normal((4, 4)) - 4 * np.eye(4)
    Q = np.eye(4) + 0.1 * np.ones((4, 4))
    X = linalg.solve_lyapunov_ct(F, Q)
    np.testing.assert_allclose(X, solve_continuous_lyapunov(F, -Q), atol=1e-12)
    Xt = linalg.solve_lyapunov_ct(F, Q, transpose=True)
    np.testing.assert_allclose(Xt, solve_continuous_lyapunov(F.T, -Q), atol=1e-12)
    assert linalg.lyapunov_residual(F, Xt, Q, transpose=True) < 1e-12


def test_lyapunov_matches_integral_oracle():
    F = np.array([[-1.0, 2.0], [0.0, -3.0]])
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    oracle, _ = quad_vec(lambda s: expm(F * s) @ Q @ expm(F.T * s), 0, np.inf, epsabs=1e-13)
    np.testing.assert_allclose(linalg.solve_lyapunov_ct(F, Q), oracle, atol=1e-10)


def test_lyapunov_rejects_non_hurwitz():
    with pytest.raises(StabilityError) as info:
        linalg.solve_lyapunov_ct(np.diag([-1.0, 0.5]), np.eye(2))
    assert info.value.abscissa == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        linalg.solve_lyapunov_ct(-np.eye(2), np.eye(3))


@st.composite
def hurwitz_systems(draw):
    n = draw(st.integers(1, 4))
    M = draw(arrays(np.float64, (n, n), elements=st.floats(-3, 3)))
    shift = draw(st.floats(0.1, 2.0))
    F = M - (np.max(np.linalg.eigvals(M).real) + shift) * np.eye(n)
    L = draw(arrays(np.float64, (n, n), elements=st.floats(-2, 2)))
    return F, L @ L.T + np.eye(n)


@settings(max_examples=60, deadline=None)
@given(hurwitz_systems())
def test_lyapunov_solution_is_symmetric_psd_with_small_residual(system):
    F, Q = system
    X = linalg.solve_lyapunov_ct(F, Q)
    assert np.array_equal(X, X.T)
    assert np.min(np.linalg.eigvalsh(X)) > 0
    scale = max(1.0, np.linalg.norm(Q)) * max(1.0, np.linalg.norm(F) * np.linalg.norm(X))
    assert linalg.lyapunov_residual(F, X, Q) <= 1e-10 * scale


def test_controllability():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert linalg.is_controllable(A, [[0.0], [1.0]])
    assert not linalg.is_controllable(A, [[1.0], [0.0]])
    C = linalg.controllability_matrix(A, [[0.0], [1.0]])
    np.testing.assert_array_equal(C, [[0.0, 1.0], [1.0, 0.0]])


def test_rank():
    assert linalg.rank(np.zeros((3, 3))) == 0
    assert linalg.rank(np.outer([1, 2, 3], [1, 1, 1])) == 1
    with pytest.raises(ValueError):
        linalg.rank(np.eye(2), tol=0)
