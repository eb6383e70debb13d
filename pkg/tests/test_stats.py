import datetime as dt
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from sklearn.base import clone

from helpers import DAY, random_zones, zone_frame
from mfakit.partition import RESIDUAL
from mfakit.stats import (
    ConvergenceError,
    GelmanScaler,
    MfaIndicatorOLS,
    RandomInterceptModel,
    RankDeficientError,
    coefficient_timeline,
    eta_squared,
    fit_mfa_indicator_model,
    fit_mfa_random_intercept_model,
    gelman_standardize,
    mfa_classes,
    ols_fit,
    random_intercept_fit,
    read_district_cases,
    read_zones,
    redistribute_cases,
    summarize_mfas,
    weekly_eta_table,
)
from oracles import reml_loglik_dense, solve3

# ---------------------------------------------------------------- redistribution


def _zones(pops, gkz):
    return pd.DataFrame({"area_id": [f"z{k}" for k in range(len(pops))], "gkz": gkz, "population": pops})


def test_redistribution_proportional():
    zones = _zones([300, 700, 0], ["A", "A", "A"])
    cases = pd.DataFrame({"gkz": ["A"], "date": [DAY], "cases_7d": [100]})
    zf = redistribute_cases(cases, zones)
    np.testing.assert_allclose(zf.cases_on(DAY), [30, 70, 0], atol=1e-12)


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=12),
       st.lists(st.integers(0, 10**5), min_size=1, max_size=4))
def test_redistribution_conserves_district_totals(pops, totals):
    pops = [p + 1 for p in pops]
    gkz = [f"d{k % len(totals)}" for k in range(len(pops))]
    zones = _zones(pops, gkz)
    present = sorted(set(gkz))
    cases = pd.DataFrame({"gkz": present, "date": [DAY] * len(present),
                          "cases_7d": [totals[int(c[1:])] for c in present]})
    zf = redistribute_cases(cases, zones)
    y = zf.cases_on(DAY)
    for c in present:
        mask = np.array(gkz) == c
        assert abs(math.fsum(y[mask]) - totals[int(c[1:])]) <= 1e-9 * max(1, totals[int(c[1:])])
        assert (y[mask] >= -1e-9).all()


def test_redistribution_errors():
    zones = _zones([10, 0], ["A", "B"])
    with pytest.raises(ValueError, match="no case data"):
        redistribute_cases(pd.DataFrame({"gkz": ["A"], "date": [DAY], "cases_7d": [1]}), zones)
    bad = pd.DataFrame({"gkz": ["A", "B"], "date": [DAY, DAY], "cases_7d": [1, 5]})
    with pytest.raises(ValueError, match="zero population"):
        redistribute_cases(bad, zones)


def test_readers_round_trip(tmp_path):
    (tmp_path / "zones.csv").write_text("area_id,gkz,population\nz1,101,10\nz2,101,30\n")
    (tmp_path / "daily.csv").write_text(
        "gkz,date,cases\n" + "".join(f"101,2020-03-{d:02d},{d}\n" for d in range(1, 11)))
    zones = read_zones(tmp_path / "zones.csv")
    cases = read_district_cases(tmp_path / "daily.csv", window=7)
    last = cases.loc[cases["date"] == dt.date(2020, 3, 10), "cases_7d"].item()
    assert last == sum(range(4, 11))
    zf = redistribute_cases(cases, zones)
    np.testing.assert_allclose(zf.cases_on(dt.date(2020, 3, 10)), [last / 4, 3 * last / 4])


# ---------------------------------------------------------------- eta squared


def test_eta_squared_hand_values():
    assert eta_squared([1, 1, 5, 5], [0, 0, 1, 1]).value == pytest.approx(1.0)
    assert eta_squared([1, 5, 1, 5], [0, 0, 1, 1]).value == pytest.approx(0.0)
    # means 2 and 6, grand mean 4: between 4*4 = 16, total 16 + 4
    e = eta_squared([1, 3, 5, 7], [0, 0, 1, 1])
    assert (e.ss_between, e.ss_total, e.value) == pytest.approx((16.0, 20.0, 0.8))
    assert eta_squared([2, 2, 2], [0, 1, 1]).value == 0.0


@given(hnp.arrays(float, st.integers(2, 40), elements=st.floats(-1e3, 1e3)),
       st.integers(1, 6), st.integers(0, 2**32 - 1),
       st.floats(0.1, 100), st.floats(-100, 100))
def test_eta_squared_decomposition_and_affine_invariance(y, k, seed, a, b):
    g = np.random.default_rng(seed).integers(0, k, y.size)
    e = eta_squared(y, g)
    assert abs(e.ss_total - e.ss_between - e.ss_within) <= 1e-9 * max(e.ss_total, 1e-300) + 1e-9
    assert 0.0 <= e.value <= 1.0
    if e.ss_total > 1e-6 * max(1.0, float(np.sum(y * y))):
        assert eta_squared(a * y + b, g).value == pytest.approx(e.value, abs=1e-6)


def test_weekly_eta_table_layout():
    dates = [dt.date(2020, 3, 2) + dt.timedelta(days=k) for k in range(10)]
    labels = [0, 0, 1, 1]
    cases = np.array([[d.day for d in dates]] * 4) * np.array([[1], [1], [3], [3]])
    zf, part = zone_frame(labels, ["A", "B", "A", "B"], [1, 1, 1, 1], cases, dates)
    tab = weekly_eta_table(zf, part)
    assert list(tab.columns) == ["MFA", "GKZ", "date range", "calendar week"]
    assert tab["calendar week"].tolist() == [10, 11]
    assert tab["date range"].tolist() == ["2020-03-02 - 2020-03-08", "2020-03-09 - 2020-03-11"]
    np.testing.assert_allclose(tab["MFA"], 1.0)
    np.testing.assert_allclose(tab["GKZ"], 0.0)


# ---------------------------------------------------------------- standardization


def test_gelman_hand_values():
    np.testing.assert_allclose(gelman_standardize([0, 10, 0, 10, 5]), np.array([-5, 5, -5, 5, 0]) / (2 * np.std([0, 10, 0, 10, 5])))
    # two points: population sd is half the spread, so the values land on +-0.5
    np.testing.assert_allclose(gelman_standardize([0, 10]), [-0.5, 0.5])
    np.testing.assert_allclose(gelman_standardize([-1, 1]), [-0.5, 0.5])
    np.testing.assert_array_equal(gelman_standardize([0, 1, 1, 0]), [0, 1, 1, 0])
    with pytest.raises(ValueError, match="zero variance"):
        gelman_standardize([3, 3, 3])


@given(hnp.arrays(float, st.integers(3, 30), elements=st.floats(-1e4, 1e4)))
def test_gelman_moments(x):
    if np.unique(x).size < 2 or np.ptp(x) < 1e-3:
        return
    z = gelman_standardize(x)
    if set(np.unique(x)) <= {0.0, 1.0}:
        np.testing.assert_array_equal(z, x)
    else:
        assert abs(z.mean()) < 1e-9 and z.std() == pytest.approx(0.5, rel=1e-9)


def test_gelman_scaler_matches_function():
    X = np.column_stack([np.arange(10.0), np.arange(10) % 2])
    s = GelmanScaler().fit(X)
    np.testing.assert_allclose(s.transform(X)[:, 0], gelman_standardize(X[:, 0]))
    np.testing.assert_array_equal(s.transform(X)[:, 1], X[:, 1])
    assert s.binary_.tolist() == [False, True]


# ---------------------------------------------------------------- OLS


def _normal_equations(zf, part):
    labels = zf.labels_for(part)
    y = np.log1p(zf.cases_on(DAY))
    pop = zf.zones["population"].to_numpy()
    pop = (pop - pop.mean()) / (2 * pop.std())
    X = np.column_stack([np.ones(y.size), (labels != RESIDUAL).astype(float), pop])
    return solve3(X.T @ X, X.T @ y)


@pytest.mark.parametrize("seed", range(10))
def test_indicator_model_matches_normal_equations(seed):
    rng = np.random.default_rng(seed)
    labels, gkz, pop = random_zones(rng)
    zf, part = zone_frame(labels, gkz, pop, rng.poisson(20, labels.size))
    res = fit_mfa_indicator_model(zf, part, DAY)
    np.testing.assert_allclose(res.estimates, _normal_equations(zf, part), rtol=0, atol=1e-8)
    assert res.names == ("(Intercept)", "mfaInd", "population")


def test_ols_standard_errors_by_hand():
    x = np.arange(6.0)
    y = np.array([1.0, 3.0, 2.0, 5.0, 4.0, 6.0])
    res = ols_fit(np.column_stack([np.ones(6), x]), y)
    slope = np.cov(x, y, ddof=1)[0, 1] / np.var(x, ddof=1)
    resid = y - (y.mean() - slope * x.mean()) - slope * x
    se = math.sqrt(resid @ resid / 4 / np.sum((x - x.mean()) ** 2))
    assert res.estimates[1] == pytest.approx(slope)
    assert res.se[1] == pytest.approx(se)
    from scipy import stats as sps
    assert res.pvalues[1] == pytest.approx(2 * sps.t(4).sf(slope / se))


def test_rank_deficient_when_every_zone_is_in_an_mfa():
    zf, part = zone_frame([0, 0, 1, 1, 1], list("ABABA"), [1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
    with pytest.raises(RankDeficientError, match="mfaInd"):
        fit_mfa_indicator_model(zf, part, DAY)


def test_exact_zero_se_gives_p_one_for_zero_estimate():
    X = np.column_stack([np.ones(5), np.arange(5.0)])
    res = ols_fit(X, 2.0 + 3.0 * X[:, 1])
    assert res.se.tolist() == [0.0, 0.0]
    assert res.pvalues.tolist() == [0.0, 0.0]
    assert ols_fit(X, np.zeros(5)).pvalues.tolist() == [1.0, 1.0]


def test_null_calibration_small():
    rng = np.random.default_rng(2)
    labels, gkz, pop = random_zones(rng, n=80)
    covered = 0
    for _ in range(200):
        zf, part = zone_frame(labels, gkz, pop, rng.poisson(30, labels.size))
        est, se, _ = fit_mfa_indicator_model(zf, part, DAY)["mfaInd"]
        covered += abs(est) < 2 * se
    assert covered >= 0.9 * 200


def test_population_driven_cases():
    rng = np.random.default_rng(5)
    labels, gkz, pop = random_zones(rng, n=120)
    zf, part = zone_frame(labels, gkz, pop, rng.poisson(pop / 50))
    res = fit_mfa_indicator_model(zf, part, DAY)
    assert res["population"][0] > 0 and res["population"][2] < 1e-6
    assert res["mfaInd"][2] > 0.01


# ---------------------------------------------------------------- REML


def _ri_fixture(rng, n_groups=8, per=10, sigma_u=1.0):
    g = np.repeat(np.arange(n_groups), per)
    X = np.column_stack([np.ones(g.size), rng.normal(size=g.size)])
    y = X @ [1.0, 2.0] + rng.normal(0, sigma_u, n_groups)[g] + rng.normal(size=g.size)
    return X, y, g


@pytest.mark.parametrize("seed", range(5))
def test_reml_matches_dense_grid(seed):
    X, y, g = _ri_fixture(np.random.default_rng(seed))
    res = random_intercept_fit(X, y, g)
    grid = np.logspace(-3, 2, 1000)
    ll = [reml_loglik_dense(t, X, y, g) for t in grid]
    step = math.log(grid[1] / grid[0])
    assert abs(math.log(res.variance_ratio) - math.log(grid[int(np.argmax(ll))])) <= step
    assert res.loglik == pytest.approx(reml_loglik_dense(res.variance_ratio, X, y, g), abs=1e-9)


def test_reml_small_unbalanced():
    rng = np.random.default_rng(11)
    g = np.array([0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2])
    X = np.column_stack([np.ones(12), rng.normal(size=12)])
    y = X @ [0.5, 1.0] + np.array([-2.0, 0.0, 2.0])[g] + rng.normal(0, 0.5, 12)
    res = random_intercept_fit(X, y, g)
    coarse = np.linspace(0, 200, 2001)
    best = coarse[int(np.argmax([reml_loglik_dense(t, X, y, g) for t in coarse]))]
    fine = np.linspace(max(best - 0.1, 0), best + 0.1, 2001)
    best = fine[int(np.argmax([reml_loglik_dense(t, X, y, g) for t in fine]))]
    assert res.variance_ratio == pytest.approx(best, abs=1e-4)


def _degenerate(rng, n_groups=6, per=5):
    g = np.repeat(np.arange(n_groups), per)
    n = g.size
    X = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
    Z = np.eye(n_groups)[g]
    basis = np.column_stack([X, Z])
    r = rng.normal(size=n)
    r -= basis @ np.linalg.lstsq(basis, r, rcond=None)[0]
    return X, X @ [1.0, -1.0, 0.5] + r, g


@pytest.mark.parametrize("seed", range(5))
def test_reml_degenerate_falls_back_to_ols(seed):
    X, y, g = _degenerate(np.random.default_rng(seed))
    res = random_intercept_fit(X, y, g)
    ols = ols_fit(X, y)
    assert res.singular and res.variance_ratio < 1e-4
    np.testing.assert_allclose(res.estimates, ols.estimates, atol=1e-6)


def test_reml_exact_fit_is_singular():
    g = np.repeat(np.arange(3), 4)
    X = np.column_stack([np.ones(12), np.arange(12.0)])
    res = random_intercept_fit(X, 2 + 3 * X[:, 1], g)
    assert res.singular and res.variance_ratio == 0.0
    np.testing.assert_allclose(res.estimates, [2, 3], atol=1e-10)


def test_reml_raises_when_groups_explain_everything():
    g = np.repeat(np.arange(4), 3)
    X = np.column_stack([np.ones(12), np.tile([0.0, 1.0, 2.0], 4)])
    y = np.array([0.0, 5.0, -3.0, 7.0])[g] + X[:, 1] + np.tile([0.0, 1e-12, 0.0], 4)
    with pytest.raises((ConvergenceError, np.linalg.LinAlgError)):
        random_intercept_fit(X, y, g, theta_max=1e4)


def test_reml_needs_two_groups():
    with pytest.raises(ValueError, match="two groups"):
        random_intercept_fit(np.column_stack([np.ones(4), np.arange(4.0)]), [1, 2, 4, 3], [0] * 4)


def test_random_intercept_model_dummies():
    rng = np.random.default_rng(9)
    labels, gkz, pop = random_zones(rng, n=90)
    zf, part = zone_frame(labels, gkz, pop, rng.poisson(25, labels.size))
    res = fit_mfa_random_intercept_model(zf, part, DAY)
    assert res.names == ("(Intercept)", "mfa_0", "mfa_1", "mfa_2", "mfa_3", "population")
    assert res.n_groups == 6


# ---------------------------------------------------------------- timeline and summaries


def test_all_zero_cases_are_not_significant():
    rng = np.random.default_rng(4)
    labels, gkz, pop = random_zones(rng)
    dates = [DAY, DAY + dt.timedelta(days=1)]
    zf, part = zone_frame(labels, gkz, pop, np.zeros((labels.size, 2)), dates)
    tl = coefficient_timeline(zf, part)
    assert not tl.failures
    grid = tl.significance_grid()
    assert len(grid) == 2 * 4 and (grid["class"] == "not_significant").all()
    assert (tl.coefficients("ols")["p"] == 1.0).all()


def test_timeline_records_failures():
    zf, part = zone_frame([0, 0, 1, 1], ["A"] * 4, [1, 2, 3, 4], [1, 2, 3, 4])
    tl = coefficient_timeline(zf, part)
    kinds = {(m, k) for _, m, k, _ in tl.failures}
    assert kinds == {("ols", "RankDeficientError"), ("random_intercept", "ValueError")}
    assert tl.coefficients().empty


def test_mfa_class_precedence():
    grid = pd.DataFrame({"date": [1, 2, 1, 2, 1], "mfa_id": [0, 0, 1, 1, 2],
                         "class": ["positive", "negative", "positive", "not_significant", "not_significant"]})
    assert mfa_classes(grid, [0, 1, 2, 3]) == {0: "negative", 1: "positive", 2: "not_significant", 3: "not_significant"}


def test_summary_quartiles():
    labels = [0, 0, 1, 1, RESIDUAL, RESIDUAL]
    zf, part = zone_frame(labels, list("AABBAB"), [4, 6, 10, 10, 1, 1], [5, 5, 15, 25, 0, 0])
    grid = pd.DataFrame({"date": [DAY, DAY], "mfa_id": [0, 1], "class": ["positive", "positive"]})
    s = summarize_mfas(zf, part, grid).set_index(["measure", "class"])
    assert s.loc[("population", "positive"), "median"] == 15
    assert s.loc[("cases", "positive"), "median"] == 25
    assert s.loc[("cases", "positive"), "q1"] == 17.5
    assert s.loc[("cases", "negative"), "n_mfas"] == 0 and np.isnan(s.loc[("cases", "negative"), "median"])


# ---------------------------------------------------------------- estimators


def test_estimators_clone_and_params():
    for est in (MfaIndicatorOLS(standardize=False), RandomInterceptModel(tol=1e-6), GelmanScaler()):
        c = clone(est)
        assert c.get_params() == est.get_params()


def test_estimators_agree_with_functions():
    rng = np.random.default_rng(1)
    X, y, g = _ri_fixture(rng)
    m = RandomInterceptModel().fit(X[:, 1:], y, groups=g)
    res = random_intercept_fit(X, y, g)
    assert m.variance_ratio_ == pytest.approx(res.variance_ratio)
    np.testing.assert_allclose(m.coef_, res.estimates[1:])
    o = MfaIndicatorOLS(standardize=False).fit(X[:, 1:], y)
    np.testing.assert_allclose([o.intercept_, *o.coef_], ols_fit(X, y).estimates)
    assert o.predict(X[:3, 1:]).shape == (3,)
