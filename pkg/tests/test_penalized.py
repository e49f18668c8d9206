"""Penalized subdistribution-hazard regression tests.

The weighted log partial likelihood is checked against a direct
double-summation oracle that builds its own reverse-KM censoring curve and
its own weights, and unpenalized fits are checked against independent
numerical maximizers of that (verified) likelihood.
"""

import numpy as np
import pytest
from scipy import optimize

from cmprisk_lab import penalized, simulate
from cmprisk_lab.data import Dataset
from cmprisk_lab.penalized import FitResult, PenaltySpec
from cmprisk_lab.simulate import ScenarioSpec

from conftest import random_sample


# ---------------------------------------------------------------------------
# independent oracle: reverse-KM + explicit weights + double summation
# ---------------------------------------------------------------------------

def _oracle_ghat_left(times, status, t):
    """Left limit of the censoring survival curve, events before censorings."""
    g = 1.0
    for s in np.unique(times[times < t]):
        y = np.count_nonzero(times >= s)
        d = np.count_nonzero((times == s) & (status != 0))
        c = np.count_nonzero((times == s) & (status == 0))
        if c:
            g *= 1.0 - c / (y - d)
    return g


def _oracle_loglik(ds, beta, event=1):
    times, status = ds.times, ds.status
    eta = ds.X @ np.asarray(beta, dtype=float)
    total = 0.0
    for i in np.flatnonzero(status == event):
        t = times[i]
        den = 0.0
        for j in range(ds.n):
            ystar = times[j] >= t or (status[j] != 0 and status[j] != event)
            if not ystar:
                continue
            if times[j] >= t:
                w = 1.0
            elif status[j] == 0:
                w = 0.0
            else:
                d = _oracle_ghat_left(times, status, times[j])
                w = _oracle_ghat_left(times, status, t) / d if d > 0 else 0.0
            den += w * np.exp(eta[j])
        total += eta[i] - np.log(den)
    return total


def test_loglik_matches_direct_summation():
    rng = np.random.default_rng(7)
    for _ in range(6):
        ds = random_sample(rng, 20, p=3)
        if not np.any(ds.status == 1):
            continue
        beta = rng.normal(scale=0.6, size=3)
        a = penalized.log_partial_likelihood(ds, beta)
        b = _oracle_loglik(ds, beta)
        assert abs(a - b) < 1e-10 * (1 + abs(b))


def test_loglik_single_subject_is_zero():
    ds = Dataset(np.array([2.0]), np.array([1]), np.array([[1.3]]), K=1)
    assert penalized.log_partial_likelihood(ds, [0.7]) == pytest.approx(0.0)


def test_loglik_two_events_null_model():
    ds = Dataset(np.array([1.0, 2.0]), np.array([1, 1]), np.zeros((2, 1)), K=1)
    ll = penalized.log_partial_likelihood(ds, [0.0])
    assert ll == pytest.approx(-np.log(2.0), abs=1e-12)


# ---------------------------------------------------------------------------
# penalty functions
# ---------------------------------------------------------------------------

def test_penalty_derivative_frozen_values():
    scad = PenaltySpec("scad", 0.2)
    assert scad.a == 3.7
    assert penalized.penalty_derivative(scad, 0.0) == pytest.approx(0.2)
    assert penalized.penalty_derivative(scad, 0.1) == pytest.approx(0.2)
    # (3.7 * 0.2 - 0.4) / 2.7 = 0.34 / 2.7
    assert penalized.penalty_derivative(scad, 0.4) == pytest.approx(
        0.34 / 2.7, abs=1e-12)
    assert penalized.penalty_derivative(scad, 5.0) == 0.0
    mcp = PenaltySpec("mcp", 0.2)
    assert mcp.a == 3.0
    assert penalized.penalty_derivative(mcp, 0.0) == pytest.approx(0.2)
    assert penalized.penalty_derivative(mcp, 0.3) == pytest.approx(0.1)
    assert penalized.penalty_derivative(mcp, 0.9) == 0.0
    lasso = PenaltySpec("lasso", 0.2)
    for b in (0.0, 0.1, 3.0):
        assert penalized.penalty_derivative(lasso, b) == 0.2


def test_penalty_derivative_continuous_at_kinks():
    eps = 1e-9
    scad = PenaltySpec("scad", 0.5, a=3.7)
    for kink in (0.5, 3.7 * 0.5):
        lo = penalized.penalty_derivative(scad, kink - eps)
        hi = penalized.penalty_derivative(scad, kink + eps)
        assert abs(lo - hi) < 1e-8
    mcp = PenaltySpec("mcp", 0.5, a=3.0)
    lo = penalized.penalty_derivative(mcp, 1.5 - eps)
    hi = penalized.penalty_derivative(mcp, 1.5 + eps)
    assert abs(lo - hi) < 1e-8


def test_penalty_value_integrates_derivative():
    for spec in (PenaltySpec("lasso", 0.3), PenaltySpec("scad", 0.3),
                 PenaltySpec("mcp", 0.3)):
        assert penalized.penalty_value(spec, 0.0) == 0.0
        for b_end in (0.1, 0.3, 0.8, 2.0):
            grid = np.linspace(0.0, b_end, 20001)
            deriv = np.array([penalized.penalty_derivative(spec, b)
                              for b in grid])
            integral = np.trapezoid(deriv, grid)
            assert penalized.penalty_value(spec, b_end) == pytest.approx(
                integral, abs=1e-6)
    # closed-form plateaus past the concave region
    scad = PenaltySpec("scad", 0.3)
    assert penalized.penalty_value(scad, 9.0) == pytest.approx(
        0.3 ** 2 * (3.7 + 1) / 2)
    mcp = PenaltySpec("mcp", 0.3)
    assert penalized.penalty_value(mcp, 9.0) == pytest.approx(
        3.0 * 0.3 ** 2 / 2)


def test_penalty_spec_validation():
    with pytest.raises(ValueError):
        PenaltySpec("ridge", 0.1)
    with pytest.raises(ValueError):
        PenaltySpec("lasso", -0.1)
    with pytest.raises(ValueError):
        PenaltySpec("scad", 0.1, a=1.0)


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def _snapshot_dataset():
    return simulate.generate(ScenarioSpec(n=200, p=12, seed=20260815))


def test_lambda_max_gives_null_fit():
    ds = _snapshot_dataset()
    lmax = penalized.lambda_max(ds)
    assert lmax == pytest.approx(0.248159599056, abs=1e-9)
    res = penalized.fit(ds, PenaltySpec("lasso", lmax * 1.000001))
    assert np.count_nonzero(res.beta) == 0
    assert res.selected == ()
    res2 = penalized.fit(ds, PenaltySpec("lasso", lmax * 0.95))
    assert np.count_nonzero(res2.beta) >= 1


def test_unpenalized_single_covariate_matches_scalar_maximizer():
    rng = np.random.default_rng(11)
    n = 50
    X = rng.standard_normal((n, 1))
    t1 = rng.exponential(1.0 / np.exp(0.8 * X[:, 0]))
    t2 = rng.exponential(1.2, size=n)
    c = rng.uniform(0, 3, size=n)
    t = np.minimum(np.minimum(t1, t2), c)
    status = np.where(t == c, 0, np.where(t == t1, 1, 2))
    ds = Dataset(t, status, X, K=2)
    res = penalized.fit(ds, PenaltySpec("lasso", 0.0))
    opt = optimize.minimize_scalar(
        lambda b: -penalized.log_partial_likelihood(ds, [b]),
        bounds=(-3, 3), method="bounded", options={"xatol": 1e-10})
    assert abs(res.beta[0] - opt.x) < 5e-4


def test_no_censoring_single_cause_reduces_to_cox():
    # with K=1 and no censoring the weighted likelihood is the plain Cox
    # partial likelihood with Breslow tie handling
    def cox_loglik(times, X, beta):
        eta = X @ beta
        return sum(eta[i] - np.log(np.sum(np.exp(eta[times >= times[i]])))
                   for i in range(len(times)))

    rng = np.random.default_rng(23)
    n = 60
    X = rng.standard_normal((n, 2))
    t = rng.exponential(1.0 / np.exp(X @ np.array([0.5, -0.5])))
    t = np.round(t * 8) / 8 + 1e-3
    ds = Dataset(t, np.ones(n, dtype=int), X, K=1)
    res = penalized.fit(ds, PenaltySpec("lasso", 0.0))
    opt = optimize.minimize(lambda b: -cox_loglik(t, X, b), np.zeros(2),
                            method="BFGS")
    assert np.max(np.abs(res.beta - opt.x)) < 1e-4


def test_lasso_snapshot():
    ds = _snapshot_dataset()
    res = penalized.fit(ds, PenaltySpec("lasso", 0.1))
    assert res.selected == (0, 1, 4, 5, 6, 7, 10, 11)
    expect = np.array([
        0.192605055277, -0.359404778132, 0.0, 0.0, 0.187588613091,
        -0.092057825146, 0.684125857964, -0.712434459492, 0.0, 0.0,
        0.82564118501, -0.729812438431])
    assert np.allclose(res.beta, expect, atol=1e-8)
    assert res.loglik == pytest.approx(-390.566786160184, abs=1e-6)
    assert res.bic == pytest.approx(823.520111252751, abs=1e-6)
    assert res.converged


def test_sign_flip_of_column_mirrors_coefficient():
    ds = _snapshot_dataset()
    res = penalized.fit(ds, PenaltySpec("scad", 0.08))
    X2 = ds.X.copy()
    X2[:, 3] = -X2[:, 3]
    ds2 = Dataset(ds.times, ds.status, X2, K=ds.K)
    res2 = penalized.fit(ds2, PenaltySpec("scad", 0.08))
    flip = res.beta.copy()
    flip[3] = -flip[3]
    assert np.allclose(res2.beta, flip, atol=1e-12)


def test_path_grid_and_warm_starts():
    ds = simulate.generate(ScenarioSpec(n=100, p=12, seed=31))
    path = penalized.fit_path(ds, "lasso")
    assert len(path) == 20
    lams = np.array([r.lam for r in path])
    assert np.all(np.diff(lams) < 0)
    assert lams[0] == pytest.approx(penalized.lambda_max(ds))
    assert lams[-1] == pytest.approx(0.01 * lams[0])
    assert np.count_nonzero(path[0].beta) == 0
    # warm-started entries match cold starts from zero at the same level
    for idx in (5, 12, 19):
        cold = penalized.fit(ds, PenaltySpec("lasso", path[idx].lam))
        assert np.max(np.abs(cold.beta - path[idx].beta)) < 1e-5
    # sparsity grows (weakly) as lambda shrinks on this sample
    sizes = [len(r.selected) for r in path]
    assert sizes[0] <= sizes[-1]


def _mkres(lam, bic, nsel):
    beta = np.zeros(5)
    beta[:nsel] = 1.0
    return FitResult(beta, tuple(range(nsel)), lam, -10.0, bic, 3, True)


def test_select_bic_rules():
    one = _mkres(0.5, 100.0, 1)
    assert penalized.select_bic([one]) is one
    sparse = _mkres(0.5, 50.0, 1)
    dense = _mkres(0.1, 50.0, 4)
    assert penalized.select_bic([sparse, dense]) is sparse
    better = _mkres(0.2, 49.0, 3)
    assert penalized.select_bic([sparse, better, dense]) is better
    with pytest.raises(ValueError):
        penalized.select_bic([])


def test_select_bic_on_real_path():
    ds = _snapshot_dataset()
    path = penalized.fit_path(ds, "mcp")
    best = penalized.select_bic(path)
    assert best.bic == min(r.bic for r in path)


def test_csv_row_format():
    res = _mkres(0.25, 42.0, 2)
    row = res.csv_row("lasso")
    parts = row.split(",")
    assert parts[0] == "lasso"
    assert float(parts[1]) == 0.25
    assert float(parts[2]) == pytest.approx(42.0)
    assert int(parts[3]) == 2
    assert len(parts) == 4 + 5


def test_warm_start_from_solution_is_stable():
    ds = _snapshot_dataset()
    spec = PenaltySpec("lasso", 0.1)
    res = penalized.fit(ds, spec)
    again = penalized.fit(ds, spec, beta0=res.beta)
    assert np.max(np.abs(again.beta - res.beta)) < 1e-4
