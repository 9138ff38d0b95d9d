"""End-to-end acceptance checks, one test per criterion.

Each test asserts the criterion exactly as stated, including its runtime
budget. A per-criterion PASS/FAIL summary is printed by conftest.py.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad_vec
from scipy.linalg import expm
from scipy.optimize import brentq

from pli_lab import flow, highgain, linalg, lqr, pli, scalar
from pli_lab.lqr import Gain, LqrProblem


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def random_lqr_case(rng):
    """A controllable (A, B), positive definite Q and R, and a stabilizing K."""
    while True:
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        M = rng.standard_normal((n, n))
        N = rng.standard_normal((m, m))
        try:
            prob = LqrProblem(A, B, M @ M.T + np.eye(n), N @ N.T + np.eye(m))
        except Exception:
            continue
        K = prob.optimum[0].K + 0.3 * rng.standard_normal((m, n))
        if Gain.of(prob, K).margin > 0.05:
            return prob, K


def central_difference(prob, K, h):
    G = np.zeros_like(K)
    for idx in np.ndindex(*K.shape):
        E = np.zeros_like(K)
        E[idx] = h
        G[idx] = (lqr.cost(prob, K + E) - lqr.cost(prob, K - E)) / (2 * h)
    return G


def test_criterion_01_scalar_optimum():
    with Timer() as tm:
        gain, J = lqr.optimal_gain(LqrProblem.scalar(1.0))
    assert abs(gain.K[0, 0] - (1 + np.sqrt(2))) <= 1e-10
    assert abs(J - (1 + np.sqrt(2))) <= 1e-10
    assert tm.elapsed < 1.0


def test_criterion_02_gradient_limit():
    with Timer() as tm:
        for r in (1.0, 2.0, 0.5):
            g = lqr.gradient(LqrProblem.scalar(1.0, r=r), [[1e6]])[0, 0]
            assert abs(g - r / 2) <= 1e-4 * r
    assert tm.elapsed < 1.0


def test_criterion_03_near_optimum_rate():
    with Timer() as tm:
        sys_ = scalar.ScalarCt(1.0)
        m = scalar.rate(sys_, sys_.kstar + 1e-4)
    target = 1.0 / (2.0 * (sys_.kstar - sys_.a))
    assert tm.elapsed < 1.0
    assert abs(m - target) <= 1e-3 * target, f"m(k*+1e-4) = {m:.6f}, stated target {target:.6f}"


def test_criterion_04_no_global_pli_witness():
    with Timer() as tm:
        prob = LqrProblem([[0, 1], [0, 0]], [[0], [1]], np.eye(2), np.eye(1))
        curve = highgain.HighGainCurve.build(prob)
        study = highgain.curve_limit_study(curve, np.geomspace(10, 1e4, 12))
    assert tm.elapsed < 10.0
    assert np.all(np.diff(study.gap) > 0)
    rel = abs(study.grad_fro[-1] - study.grad_fro[-2]) / study.grad_fro[-2]
    assert rel < 1e-2, f"|grad| relative change over the last two points is {rel:.3f}"
    assert np.all(np.diff(study.ratio[-5:]) < 0), f"ratio tail {study.ratio[-5:]}"


def test_criterion_05_boundary_blow_up():
    with Timer() as tm:
        prob = LqrProblem.scalar(1.0)
        norms = []
        for i in range(1, 7):
            k = 1 + 10.0**-i
            norms.append(abs(lqr.gradient(prob, [[k]])[0, 0]))
            absc = linalg.spectral_abscissa(prob.A - prob.B * k).abscissa
            lam_min = np.min(np.linalg.eigvalsh(prob.Q))
            assert lqr.cost(prob, [[k]]) - (-lam_min / (2 * absc)) >= 0
    assert np.all(np.diff(norms) > 0)
    assert norms[-1] > 1e4
    assert tm.elapsed < 1.0


def test_criterion_06_linear_exponential_profile():
    sys_ = scalar.ScalarCt(1.0)
    prob = LqrProblem.scalar(1.0)
    with Timer() as tm:
        k_right = brentq(lambda k: sys_.gap(k) - 8.0, sys_.kstar + 1, 100.0, xtol=1e-14)
        k_left = scalar.mirror_gain(sys_, k_right)
        right = flow.integrate_gradient_flow(prob, [[k_right]])
        left = flow.integrate_gradient_flow(prob, [[k_left]])
        cert = pli.certify_trajectory(right)
    assert abs(right.gap[0] - 8.0) <= 0.05 and abs(left.gap[0] - 8.0) <= 0.05
    assert cert.valid
    assert 0.15 <= cert.slope <= 0.27
    assert tm.elapsed < 30.0
    t_r = right.first_time_below(1e-6)
    t_l = left.first_time_below(1e-6)
    assert t_l <= 0.1 * t_r, f"left {t_l:.3f} vs right {t_r:.3f} (ratio {t_l / t_r:.3f})"


def test_criterion_07_discretization_sweep():
    hs = [1, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
    with Timer() as tm:
        sweep = scalar.dt_rate_sweep(scalar.ScalarCt(1.0), hs)
    assert np.all(np.diff(sweep.md_min) < 0)
    assert np.all(np.diff(sweep.kd_min) > 0)
    assert sweep.md_min[-1] < 0.25 * sweep.md_min[0]
    assert tm.elapsed < 10.0


def test_criterion_08_gradient_matches_finite_differences():
    rng = np.random.default_rng(20240601)
    with Timer() as tm:
        for _ in range(20):
            prob, K = random_lqr_case(rng)
            an = lqr.gradient(prob, K)
            fd = central_difference(prob, K, 1e-5 * max(1.0, np.abs(K).max()))
            assert np.all(np.abs(fd - an) <= 1e-5 * np.abs(an))
    assert tm.elapsed < 30.0


def test_criterion_09_lyapunov_solver():
    rng = np.random.default_rng(99)
    with Timer() as tm:
        for _ in range(20):
            n = int(rng.integers(1, 5))
            F = rng.standard_normal((n, n))
            F -= (linalg.spectral_abscissa(F).abscissa + rng.uniform(0.1, 1.0)) * np.eye(n)
            M = rng.standard_normal((n, n))
            Q = M @ M.T
            X = linalg.solve_lyapunov_ct(F, Q)
            assert linalg.lyapunov_residual(F, X, Q) <= 1e-10 * max(1.0, np.linalg.norm(Q))
            oracle, _ = quad_vec(lambda s: expm(F * s) @ Q @ expm(F.T * s), 0, np.inf,
                                 epsabs=1e-12, epsrel=1e-12)
            assert np.max(np.abs(X - oracle)) <= 1e-6
    assert tm.elapsed < 10.0


def test_criterion_10_pli_zoo_classification():
    with Timer() as tm:
        reports = {name: pli.diagnose_cost(c) for name, c in pli.zoo_examples().items()}
    for name, cost in pli.zoo_examples().items():
        assert reports[name].verdict is cost.truth, name
    fit = reports["saturating"].ksat
    assert abs(fit.a - 1.0) <= 0.05 and abs(fit.b - 1.0) <= 0.05
    assert tm.elapsed < 30.0


def test_criterion_11_exponential_bound_soundness():
    cost = pli.zoo_examples()["quadratic(mu=1)"]
    mu = 1.0
    with Timer() as tm:
        traj = flow.integrate_cost_flow(cost.f, cost.grad, np.array(4.0), f_min=cost.f_min)
    assert np.all(traj.gap <= traj.gap[0] * np.exp(-2 * mu * traj.t) * (1 + 1e-6))
    assert tm.elapsed < 5.0


@pytest.mark.parametrize("center, equilibrium", [(0.0, 0.0), (3.0, 2.0), (0.5, 0.0)])
def test_criterion_12_prox_fixed_points(center, equilibrium):
    with Timer() as tm:
        traj = flow.integrate_prox_flow_scalar(lambda x: x - center, 5.0)
    assert abs(traj.params[-1, 0] - equilibrium) <= 1e-6
    assert tm.elapsed < 5.0
