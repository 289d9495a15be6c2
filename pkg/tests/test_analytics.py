import csv
import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from intlindex.analytics import (
    FitResult,
    SvrConfig,
    cross_correlation,
    exp_fit,
    fit_report_json,
    linear_fit,
    pearson,
    poly_fit,
    svr_fit,
    svr_objective,
)
from intlindex.errors import DegenerateDesignError, UndefinedCorrelationError

from .conftest import FIXTURES


def snip_pairs():
    with (FIXTURES / "snip_pairs.csv").open() as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows])


# Frozen oracle values for snip_pairs.csv:
# linear and quadratic from the normal equations in 50-digit mpmath arithmetic,
# exponential from a global grid over (a, b) followed by 12 zoomed 201x201 grids.
LINEAR_ORACLE = (2.9102891392286357014, -0.97481506109650302317)
LINEAR_RMSE = 1.1654635641362653854
LINEAR_R2 = 0.90503814779057476322
QUADRATIC_ORACLE = (0.7251153256737692404, -0.50831591493625110516, 1.9460641527671317669)
EXP_GRID_ORACLE = (1.3455597050367998, 0.53651738144768)


# ---- linear ------------------------------------------------------------------------


def test_linear_exact():
    x = np.arange(10.0)
    f = linear_fit(x, 2 * x + 1)
    assert f.coefficients == pytest.approx((2.0, 1.0), abs=1e-9)
    assert f.r_squared == pytest.approx(1.0, abs=1e-9)
    assert f.rmse == pytest.approx(0.0, abs=1e-9)


def test_linear_constant_y():
    f = linear_fit([1, 2, 3], [4, 4, 4])
    assert f.coefficients[0] == 0.0
    assert f.r_squared == 0.0


def test_linear_constant_x():
    with pytest.raises(DegenerateDesignError):
        linear_fit([2, 2, 2], [1, 2, 3])


def test_linear_input_checks():
    with pytest.raises(ValueError):
        linear_fit([1], [1])
    with pytest.raises(ValueError):
        linear_fit([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        linear_fit([1, float("nan")], [1, 2])


def test_linear_snip_pairs_oracle():
    x, y = snip_pairs()
    f = linear_fit(x, y)
    assert f.coefficients == pytest.approx(LINEAR_ORACLE, abs=1e-9)
    assert f.rmse == pytest.approx(LINEAR_RMSE, abs=1e-9)
    assert f.r_squared == pytest.approx(LINEAR_R2, abs=1e-9)


def test_linear_oracle_rederived():
    # recompute the frozen linear oracle from the fixture in extended precision
    mpmath.mp.dps = 50
    x, y = snip_pairs()
    with (FIXTURES / "snip_pairs.csv").open() as fh:
        rows = list(csv.reader(fh))[1:]
    X = [mpmath.mpf(r[0]) for r in rows]
    Y = [mpmath.mpf(r[1]) for r in rows]
    n = len(X)
    sx, sy = sum(X), sum(Y)
    slope = (n * sum(a * b for a, b in zip(X, Y)) - sx * sy) / (n * sum(a * a for a in X) - sx * sx)
    assert float(slope) == pytest.approx(LINEAR_ORACLE[0], abs=1e-15)
    assert float((sy - slope * sx) / n) == pytest.approx(LINEAR_ORACLE[1], abs=1e-15)


# ---- polynomial ----------------------------------------------------------------------


def test_poly_exact_quadratic():
    x = np.linspace(-2, 3, 12)
    f = poly_fit(x, 0.5 * x**2 - 3 * x + 2, 2)
    assert f.coefficients == pytest.approx((0.5, -3.0, 2.0), abs=1e-10)
    assert f.rmse == pytest.approx(0.0, abs=1e-10)


def test_poly_degree_one_equals_linear():
    x, y = snip_pairs()
    assert poly_fit(x, y, 1).coefficients == pytest.approx(linear_fit(x, y).coefficients, abs=1e-9)


def test_poly_snip_pairs_oracle():
    x, y = snip_pairs()
    assert poly_fit(x, y, 2).coefficients == pytest.approx(QUADRATIC_ORACLE, abs=1e-6)


def test_poly_rank_deficient():
    with pytest.raises(DegenerateDesignError):
        poly_fit([1, 1, 2, 2], [1, 2, 3, 4], 2)
    with pytest.raises(ValueError):
        poly_fit([1, 2], [1, 2], 2)
    with pytest.raises(ValueError):
        poly_fit([1, 2, 3], [1, 2, 3], 6)


def test_poly_high_degree_far_from_origin():
    # centring keeps the normal equations solvable where raw powers would not be
    x = np.linspace(1000, 1010, 30)
    t = x - 1005
    y = 1 + t + 0.1 * t**3
    f = poly_fit(x, y, 3)
    assert f.rmse < 1e-6


# ---- exponential -----------------------------------------------------------------------


def test_exp_exact():
    x = np.linspace(0, 4, 20)
    f = exp_fit(x, 3 * np.exp(0.5 * x))
    assert f.coefficients == pytest.approx((3.0, 0.5), abs=1e-9)


def test_exp_constant():
    f = exp_fit([1, 2, 3, 4], [2.5, 2.5, 2.5, 2.5])
    assert f.coefficients == pytest.approx((2.5, 0.0), abs=1e-12)


def test_exp_domain():
    with pytest.raises(ValueError):
        exp_fit([1, 2, 3], [1, 0, 2])


def test_exp_snip_pairs_grid_oracle():
    x, y = snip_pairs()
    f = exp_fit(x, y)
    assert f.coefficients == pytest.approx(EXP_GRID_ORACLE, abs=1e-4)


def test_exp_step_never_increases_error():
    x, y = snip_pairs()
    b, log_a = np.polyfit(x, np.log(y), 1)
    f = exp_fit(x, y)
    start = float(np.sum((y - math.exp(log_a) * np.exp(b * x)) ** 2))
    assert f.rmse ** 2 * x.size <= start + 1e-12


# ---- SVR ---------------------------------------------------------------------------------


def test_svr_config_validation():
    with pytest.raises(ValueError):
        SvrConfig(epsilon=0)
    with pytest.raises(ValueError):
        SvrConfig(cost=-1)


def test_svr_noise_free_inside_tube():
    x = np.linspace(0, 5, 30)
    y = 2 * x + 1
    eps = 1.0
    f = svr_fit(x, y, SvrConfig(epsilon=eps))
    # every point inside the tube: no slack is paid
    assert np.max(np.abs(y - f.predict(x))) <= eps + 1e-6
    assert f.rmse <= eps
    # the flattened line beats the true line on the regularized objective
    assert svr_objective(x, y, *f.coefficients, eps, 4.0) <= svr_objective(x, y, 2.0, 1.0, eps, 4.0)


@pytest.mark.parametrize("seed", range(3))
def test_svr_small_epsilon_close_to_least_squares(seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, 100)
    y = 2 * x + 1 + rng.normal(0, 0.5, x.size)
    s = svr_fit(x, y, SvrConfig(epsilon=1e-3, cost=1e4))
    assert s.rmse <= 1.05 * linear_fit(x, y).rmse


def test_svr_snip_pairs_band():
    x, y = snip_pairs()
    s = svr_fit(x, y, SvrConfig(epsilon=0.70, cost=4.0))
    assert s.rmse <= 1.1 * linear_fit(x, y).rmse


def test_svr_nonconvergence_flagged():
    x, y = snip_pairs()
    s = svr_fit(x, y, SvrConfig(epsilon=0.7, cost=4.0, max_iterations=3))
    assert not s.converged and s.iterations == 3


def test_svr_not_worse_than_start_objective():
    x, y = snip_pairs()
    cfg = SvrConfig(0.7, 4.0)
    s = svr_fit(x, y, cfg)
    ls = linear_fit(x, y)
    assert svr_objective(x, y, *s.coefficients, 0.7, 4.0) <= svr_objective(x, y, *ls.coefficients, 0.7, 4.0) + 1e-9


# ---- fit invariants -------------------------------------------------------------------


# abscissae on a 0.1 lattice keep the designs well conditioned
data = st.lists(st.tuples(st.integers(-500, 500).map(lambda v: v / 10), st.floats(-50, 50)), min_size=4, max_size=30)


@settings(max_examples=60, deadline=None)
@given(data)
def test_fits_beat_constant_mean(points):
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    assume(np.ptp(x) > 1e-3)
    base = float(np.sqrt(np.mean((y - y.mean()) ** 2)))
    assert linear_fit(x, y).rmse <= base + 1e-9
    assume(np.unique(x).size > 2)
    assert poly_fit(x, y, 2).rmse <= base + 1e-7
    if np.all(y > 0):
        assert exp_fit(x, y).rmse <= base + 1e-9


@settings(max_examples=60, deadline=None)
@given(data)
def test_linear_r2_is_pearson_squared(points):
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    assert linear_fit(x, y).r_squared == pytest.approx(pearson(x, y) ** 2, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(data)
def test_poly_one_matches_linear(points):
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    assume(np.ptp(x) > 1e-1)
    a, b = poly_fit(x, y, 1).coefficients, linear_fit(x, y).coefficients
    assert a == pytest.approx(b, abs=1e-9, rel=1e-9)


def test_rmse_zero_iff_exact():
    x = np.arange(5.0)
    exact = linear_fit(x, 3 * x)
    assert exact.rmse == 0.0 or exact.rmse < 1e-15
    noisy = linear_fit(x, 3 * x + np.array([0, 0.1, 0, 0, 0]))
    assert noisy.rmse > 0 and noisy.r_squared < 1


# ---- cross-correlation -----------------------------------------------------------------------


def test_xcorr_identity_and_negation():
    x = np.array([1.0, 3, 2, 5, 4, 6])
    assert cross_correlation(x, x, 0)[0] == pytest.approx(1.0, abs=1e-15)
    assert cross_correlation(x, -x, 0)[0] == pytest.approx(-1.0, abs=1e-15)


def direct_xcorr(x, y, k):
    mpmath.mp.dps = 40
    X = [mpmath.mpf(v) for v in x]
    Y = [mpmath.mpf(v) for v in y]
    n = len(X)
    mx, my = sum(X) / n, sum(Y) / n
    num = sum((X[t] - mx) * (Y[t + k] - my) for t in range(n) if 0 <= t + k < n)
    den = mpmath.sqrt(sum((v - mx) ** 2 for v in X) * sum((v - my) ** 2 for v in Y))
    return float(num / den)


def test_xcorr_shift_peaks_at_lag_one():
    rng = np.random.default_rng(4)
    x = rng.normal(size=40)
    y = np.roll(x, 1)
    y[0] = rng.normal()
    r = cross_correlation(x, y, 3)
    assert max(r, key=r.get) == 1
    for k, v in r.items():
        assert v == pytest.approx(direct_xcorr(x, y, k), abs=1e-12)


def test_xcorr_errors():
    with pytest.raises(UndefinedCorrelationError):
        cross_correlation([1, 1, 1], [1, 2, 3], 1)
    with pytest.raises(ValueError):
        cross_correlation([1, 2, 3], [3, 2, 1], 3)


@settings(max_examples=80, deadline=None)
@given(data, st.integers(0, 3))
def test_xcorr_bounded_and_symmetric(points, lag):
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    assume(np.ptp(x) > 1e-6 and np.ptp(y) > 1e-6 and lag < x.size)
    r = cross_correlation(x, y, lag)
    assert all(-1.0 <= v <= 1.0 for v in r.values())
    assert r[0] == pytest.approx(cross_correlation(y, x, 0)[0], abs=1e-12)


# ---- export ---------------------------------------------------------------------------------


def test_fit_report_json():
    x, y = snip_pairs()
    report = json.loads(fit_report_json([linear_fit(x, y), {"kind": "exponential", "error": "x"}], n=48))
    assert report["n"] == 48
    first = report["fits"][0]
    assert set(first) == {"kind", "coefficients", "r_squared", "rmse", "converged", "iterations"}
    assert FitResult(**{**first, "coefficients": tuple(first["coefficients"])}).predict([0.0])[0] == pytest.approx(
        first["coefficients"][1])
