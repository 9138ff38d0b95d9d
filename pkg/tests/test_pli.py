import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pli_lab import flow, lqr, pli, scalar
from pli_lab.errors import CertificationError
from pli_lab.pli import Ksat, SqrtMu, Tabulated, Verdict

UNIT = scalar.ScalarCt(1.0)


def right_side_lqr_samples(num=2000):
    ks = UNIT.kstar + np.geomspace(1e-4, 1e4, num)
    gaps = np.array([UNIT.gap(k) for k in ks])
    grads = np.array([abs(scalar.ct_closed_forms(UNIT, k).grad) for k in ks])
    return gaps, grads


def test_comparison_functions():
    assert SqrtMu(2.0)(8.0) == pytest.approx(4.0)
    assert Ksat(1.0, 1.0)(1.0) == pytest.approx(np.sqrt(0.5))
    assert Ksat(4.0, 3.0).limit == 2.0
    tab = Tabulated([1.0, 2.0], [1.0, 3.0])
    assert tab(0.5) == pytest.approx(0.5)
    assert tab(1.5) == pytest.approx(2.0)
    grid = np.linspace(0, 10, 11)
    for alpha in (SqrtMu(1.0), Ksat(1.0, 2.0), tab):
        assert pli.is_positive_definite(alpha, grid)
    assert not pli.is_positive_definite(lambda r: np.maximum(np.asarray(r) - 1.0, 0.0), grid)


@pytest.mark.parametrize("bad", [lambda: SqrtMu(0.0), lambda: Ksat(1.0, -1.0),
                                 lambda: Tabulated([2.0, 1.0], [1.0, 1.0]),
                                 lambda: Tabulated([1.0], [0.0])])
def test_comparison_function_validation(bad):
    with pytest.raises(ValueError):
        bad()


def test_verdict_strings():
    assert [v.value for v in Verdict] == [
        "ConsistentWithGlobal", "ConsistentWithKsat", "ConsistentWithSemiGlobalOnly",
        "LocalOnly", "Inconclusive"]


def test_empirical_mu_of_quadratic_is_constant():
    # f = 3 x^2 / 2: |grad|^2 / gap = 9 x^2 / (1.5 x^2) = 6
    x = np.linspace(-5, 5, 1001)
    eps, mu = pli.empirical_mu(1.5 * x * x, 3 * np.abs(x))
    np.testing.assert_allclose(mu, 6.0, rtol=1e-12)
    assert eps[-1] == pytest.approx(37.5)


def test_empirical_mu_uses_only_the_sublevel_set():
    gaps = np.array([1.0, 2.0, 4.0])
    grads = np.array([2.0, 1.0, 4.0])  # ratios 4, 0.5, 4
    _, mu = pli.empirical_mu(gaps, grads, [0.5, 1.0, 3.0, 4.0])
    assert np.isnan(mu[0])
    np.testing.assert_array_equal(mu[1:], [4.0, 0.5, 0.5])
    with pytest.raises(ValueError):
        pli.empirical_mu(gaps, grads, [2.0, 1.0])
    with pytest.raises(ValueError):
        pli.empirical_mu([-1.0], [1.0])


def test_empirical_mu_of_scalar_lqr_decays_for_large_gains():
    gaps, grads = right_side_lqr_samples()
    _, mu = pli.empirical_mu(gaps, grads)
    assert np.all(np.diff(mu) < 0)
    # |grad| <= 1/2 on the right, so mu_hat(eps) <= 1 / (4 eps) at the largest eps
    assert mu[-1] <= 0.25 / gaps.max() * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3)), min_size=1, max_size=60))
def test_empirical_mu_is_non_increasing(samples):
    gaps, grads = map(np.array, zip(*samples))
    _, mu = pli.empirical_mu(gaps, grads)
    finite = mu[np.isfinite(mu)]
    assert np.all(np.diff(finite) <= 0)


def test_lower_envelope_takes_bin_minimum():
    gaps = np.array([1.0, 1.0, 1.0, 100.0])
    grads = np.array([3.0, 1.0, 2.0, 5.0])
    r, g = pli.lower_envelope(gaps, grads, num_bins=2)
    np.testing.assert_array_equal(r, [1.0, 100.0])
    np.testing.assert_array_equal(g, [1.0, 5.0])


def test_ksat_fit_recovers_exact_parameters():
    r = np.geomspace(1e-6, 1e4, 500)
    fit = pli.fit_ksat(r, np.sqrt(2.0 * r / (0.5 + r)))
    assert fit.a == pytest.approx(2.0, rel=1e-8)
    assert fit.b == pytest.approx(0.5, rel=1e-8)
    assert not fit.saturated
    assert fit.residual < 1e-8


def test_ksat_fit_saturates_on_global_data():
    x = np.linspace(-10, 10, 2001)
    fit = pli.fit_ksat(0.5 * x * x, np.abs(x))
    assert fit.saturated
    # the fit approaches a / b = 2 mu = 2 with both parameters running off
    assert fit.a / fit.b == pytest.approx(2.0, rel=1e-2)


def test_ksat_fit_for_scalar_lqr_is_a_valid_lower_bound():
    gaps, grads = right_side_lqr_samples()
    fit = pli.fit_ksat(gaps, grads)
    assert fit.alpha.limit <= 0.5
    r, g = pli.lower_envelope(gaps, grads)
    assert np.all(fit.alpha(r) <= g * (1 + 1e-12))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ksat_fit_never_exceeds_the_envelope(seed):
    rng = np.random.default_rng(seed)
    gaps = 10 ** rng.uniform(-4, 3, 200)
    grads = 10 ** rng.uniform(-2, 1, 200)
    fit = pli.fit_ksat(gaps, grads)
    if fit is not None:
        r, g = pli.lower_envelope(gaps, grads)
        assert np.all(fit.alpha(r) <= g * (1 + 1e-10))


def test_ksat_fit_needs_three_envelope_points():
    assert pli.fit_ksat([1.0, 2.0], [1.0, 1.0]) is None


@pytest.mark.parametrize("name", ["quadratic(mu=1)", "saturating", "log1p_square", "double_well"])
def test_zoo_verdicts(name):
    cost = pli.zoo_examples()[name]
    rep = pli.diagnose_cost(cost)
    assert rep.verdict is cost.truth


def test_saturating_zoo_cost_is_exact():
    cost = pli.saturating()
    x, gaps, grads = cost.sample(201, span=20)
    np.testing.assert_allclose(grads**2, gaps / (1 + gaps), rtol=1e-12, atol=1e-300)
    h = 1e-6
    for xi in (-3.0, 0.7, 12.0):
        fd = (cost.f(xi + h) - cost.f(xi - h)) / (2 * h)
        assert fd == pytest.approx(cost.grad(xi), rel=1e-6)


def test_verdicts_are_consistent_with_mu_hat():
    reports = {n: pli.diagnose_cost(c) for n, c in pli.zoo_examples().items()}
    # a global bound keeps mu_hat bounded away from zero, the others let it decay
    glob = reports["quadratic(mu=1)"].mu_hat
    assert glob.min() == pytest.approx(2.0, rel=1e-9)
    semi = reports["log1p_square"].mu_hat
    assert semi[-1] < 1e-3 * np.nanmax(semi)
    assert reports["double_well"].mu_hat[-1] < 1e-3


def test_scalar_lqr_large_gains_are_ksat():
    gaps, grads = right_side_lqr_samples()
    rep = pli.diagnose(gaps, grads)
    assert rep.verdict is Verdict.KSAT
    assert abs(rep.tail_slope) < 0.25


def test_vanishing_gradient_at_positive_gap_is_local():
    gaps = np.geomspace(1e-3, 10, 50)
    grads = np.sqrt(gaps)
    grads[30] = 0.0
    assert pli.diagnose(gaps, grads).verdict is Verdict.LOCAL


def test_too_few_samples_is_inconclusive():
    assert pli.diagnose([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]).verdict is Verdict.INCONCLUSIVE


def test_report_serialization():
    rep = pli.diagnose_cost(pli.saturating())
    lines = rep.to_csv().splitlines()
    assert lines[0] == "eps,mu_hat"
    assert len(lines) == 1 + len(rep.eps_grid)
    side = json.loads(json.dumps(rep.sidecar()))
    assert side["verdict"] == "ConsistentWithKsat"
    assert side["ksat"]["a"] == pytest.approx(1.0, abs=1e-6)
    assert side["ksat"]["saturated"] is False


def test_gles_certificate_of_exponential_decay():
    t = np.linspace(0, 40, 401)
    gap = 5 * np.exp(-0.3 * t)
    cert = pli.certify_gles(t, gap, np.sqrt(0.3 * gap))
    assert cert.valid
    assert cert.rate == pytest.approx(0.3, rel=1e-6)
    # split at the first sample below 0.5: t = ln(10) / 0.3 rounded up to the grid
    assert cert.t_split == pytest.approx(7.7)
    assert np.all(gap <= cert.bound(t) + 1e-12)


def test_gles_slope_is_an_upper_bound_before_the_split():
    # concave start: the steepest chord is larger than the least-squares slope
    t = np.linspace(0, 10, 101)
    gap = np.where(t < 5, 10 - 0.1 * t * t, 7.5 * np.exp(-(t - 5)))
    grad = np.sqrt(np.abs(np.gradient(gap, t)))
    cert = pli.certify_gles(t, gap, grad)
    assert np.all(gap <= cert.bound(t) + 1e-12)


def test_gles_certificate_of_scalar_lqr_flow():
    traj = flow.integrate_gradient_flow(lqr.LqrProblem.scalar(1.0), [[5.0]])
    cert = pli.certify_trajectory(traj)
    assert cert.valid
    assert cert.max_violation <= 1e-6 * traj.gap[0]
    # the exponential rate cannot beat the local rate sqrt(2) near the optimum by much
    assert 0 < cert.rate <= np.sqrt(2) * 1.01


@pytest.mark.parametrize("t, gap, match", [
    (np.arange(9.0), np.exp(-np.arange(9.0)), "10 samples"),
    (np.arange(20.0), np.r_[np.zeros(1), np.ones(19)], "initial gap"),
    (np.arange(20.0), np.exp(np.arange(20.0)), "non-increasing"),
    (np.arange(20.0), np.ones(20), "never enters"),
])
def test_gles_certificate_errors(t, gap, match):
    with pytest.raises(CertificationError, match=match):
        pli.certify_gles(t, gap, np.ones_like(t))
