"""Association between MFAs and area-level case counts.

District-level counts are spread over zones in proportion to population,
then three instruments compare MFAs with administrative districts:

* the correlation ratio (eta squared) of zone-level 7-day counts grouped by
  MFA versus by district;
* an OLS model ``log(1 + cases) ~ 1 + mfaInd + population``;
* a random-intercept model with one dummy per MFA (reference: residual
  territory) and a random intercept per district, fit by profiled REML.

Continuous predictors are centred and divided by two standard deviations so
their coefficients are comparable with those of 0/1 indicators.
"""
from __future__ import annotations

import datetime as dt
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import linalg, optimize
from scipy import stats as sps
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .partition import RESIDUAL, Partition

__all__ = [
    "ZoneFrame",
    "EtaSquared",
    "RegressionResult",
    "RankDeficientError",
    "ConvergenceError",
    "read_zones",
    "read_district_cases",
    "redistribute_cases",
    "eta_squared",
    "weekly_eta_table",
    "gelman_standardize",
    "GelmanScaler",
    "ols_fit",
    "random_intercept_fit",
    "fit_mfa_indicator_model",
    "fit_mfa_random_intercept_model",
    "coefficient_timeline",
    "CoefficientTimeline",
    "summarize_mfas",
    "MfaIndicatorOLS",
    "RandomInterceptModel",
]

SIGNIFICANCE = 0.01
CLASSES = ("positive", "not_significant", "negative")


class RankDeficientError(ValueError):
    """The design matrix does not have full column rank."""


class ConvergenceError(RuntimeError):
    """The REML search did not find an interior optimum."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# --------------------------------------------------------------------------
# zone data


def read_zones(source) -> pd.DataFrame:
    """``area_id,gkz,population`` CSV; ids are read as strings."""
    df = pd.read_csv(source, dtype={"area_id": str, "gkz": str})
    missing = {"area_id", "gkz", "population"} - set(df.columns)
    if missing:
        raise ValueError(f"zones file lacks column(s) {sorted(missing)}")
    if df["area_id"].duplicated().any():
        raise ValueError(f"zone {df['area_id'][df['area_id'].duplicated()].iloc[0]!r} listed twice")
    pop = pd.to_numeric(df["population"], errors="coerce")
    if pop.isna().any() or (pop < 0).any():
        raise ValueError("populations must be non-negative numbers")
    df["population"] = pop.astype(float)
    return df[["area_id", "gkz", "population"]]


def read_district_cases(source, window: int | None = None) -> pd.DataFrame:
    """District case table as ``gkz, date, cases_7d``.

    With ``window`` the file holds daily new cases in a ``cases`` column and
    trailing sums over ``window`` calendar days (reference date included) are
    formed; missing days count as zero.
    """
    df = pd.read_csv(source, dtype={"gkz": str})
    if "gkz" not in df.columns or "date" not in df.columns:
        raise ValueError("district cases need gkz and date columns")
    try:
        df["date"] = [dt.date.fromisoformat(str(d)) for d in df["date"]]
    except ValueError as exc:
        raise ValueError(f"bad date in district cases: {exc}") from None
    if window is None:
        if "cases_7d" not in df.columns:
            raise ValueError("district cases need a cases_7d column (or pass window with daily cases)")
        out = df[["gkz", "date", "cases_7d"]].copy()
    else:
        col = "cases" if "cases" in df.columns else "cases_7d"
        daily = df.pivot_table(index="gkz", columns="date", values=col, aggfunc="sum")
        days = pd.date_range(min(daily.columns), max(daily.columns), freq="D").date
        daily = daily.reindex(columns=days, fill_value=0).fillna(0)
        summed = daily.T.rolling(window, min_periods=1).sum().T
        out = summed.stack().rename("cases_7d").reset_index()
        out.columns = ["gkz", "date", "cases_7d"]
    out["cases_7d"] = pd.to_numeric(out["cases_7d"], errors="coerce")
    if out["cases_7d"].isna().any() or (out["cases_7d"] < 0).any():
        raise ValueError("case counts must be non-negative numbers")
    return out


@dataclass(frozen=True, eq=False)
class ZoneFrame:
    """Zones with district, population and zone-level 7-day case counts.

    ``zones`` is indexed by area id with columns ``gkz`` and ``population``;
    ``cases`` is indexed like ``zones`` with one column per date.
    """

    zones: pd.DataFrame
    cases: pd.DataFrame

    @property
    def dates(self) -> list[dt.date]:
        return list(self.cases.columns)

    @property
    def area_ids(self) -> list[str]:
        return list(self.zones.index)

    def labels_for(self, partition: Partition) -> np.ndarray:
        """MFA id of every zone, in zone order."""
        assign = partition.assignment
        missing = [a for a in self.zones.index if a not in assign]
        if missing:
            raise ValueError(f"zone {missing[0]!r} is not covered by the partition")
        return np.array([assign[a] for a in self.zones.index], dtype=np.int64)

    def cases_on(self, date: dt.date) -> np.ndarray:
        if date not in self.cases.columns:
            raise KeyError(f"no case data for {date}")
        return self.cases[date].to_numpy(dtype=float)


def redistribute_cases(district_cases: pd.DataFrame, zones: pd.DataFrame) -> ZoneFrame:
    """Spread district counts over zones proportionally to population.

    District totals are conserved: after the proportional split, the
    rounding residue of each district and date is added to its most
    populous zone.

    Raises
    ------
    ValueError
        If a zone's district has no case rows, or a district with positive
        cases has zero population.
    """
    zones = zones.copy()
    if "area_id" in zones.columns:
        zones = zones.set_index("area_id")
    zones.index = zones.index.astype(str)
    table = district_cases.pivot_table(index="gkz", columns="date", values="cases_7d", aggfunc="sum")
    table = table.reindex(columns=sorted(table.columns))
    gkz = zones["gkz"].astype(str).to_numpy()
    missing = sorted(set(gkz) - set(table.index.astype(str)))
    if missing:
        raise ValueError(f"district {missing[0]!r} has no case data")
    if table.isna().any().any():
        bad = table.index[table.isna().any(axis=1)][0]
        raise ValueError(f"district {bad!r} lacks case data on some dates")
    table.index = table.index.astype(str)
    pop = zones["population"].to_numpy(dtype=float)
    codes, inv = np.unique(gkz, return_inverse=True)
    pop_d = np.bincount(inv, weights=pop, minlength=codes.size)
    dc = table.loc[codes].to_numpy(dtype=float)
    zero_pop = (pop_d <= 0) & (dc.max(axis=1) > 0)
    if zero_pop.any():
        raise ValueError(f"district {codes[zero_pop][0]!r} has cases but zero population")
    share = np.divide(pop, pop_d[inv], out=np.zeros_like(pop), where=pop_d[inv] > 0)
    values = dc[inv] * share[:, None]
    # conservation: push each district's residue onto its most populous zone
    order = np.lexsort((-pop, inv))
    first = order[np.r_[0, np.flatnonzero(np.diff(inv[order])) + 1]]
    for d_idx, z in zip(inv[first], first):
        if pop_d[d_idx] <= 0:
            continue
        members = inv == d_idx
        for t in range(values.shape[1]):
            values[z, t] += dc[d_idx, t] - math.fsum(values[members, t])
    cases = pd.DataFrame(values, index=zones.index, columns=list(table.columns))
    return ZoneFrame(zones[["gkz", "population"]], cases)


# --------------------------------------------------------------------------
# eta squared


@dataclass(frozen=True)
class EtaSquared:
    """Correlation ratio with its sum-of-squares decomposition."""

    value: float
    ss_between: float
    ss_within: float
    ss_total: float


def eta_squared(y, groups) -> EtaSquared:
    """Share of the variance of ``y`` explained by group means.

    Uses population (1/N) variances; both the between and within terms weight
    groups by their size. With no variation at all the index is 0.
    """
    y = np.asarray(y, dtype=float).ravel()
    groups = np.asarray(groups).ravel()
    if y.size == 0:
        raise ValueError("eta squared needs at least one observation")
    if groups.size != y.size:
        raise ValueError("groups must label every observation")
    _, g = np.unique(groups, return_inverse=True)
    n_g = np.bincount(g).astype(float)
    mean = y.mean()
    mean_g = np.bincount(g, weights=y) / n_g
    ss_between = float(np.sum(n_g * (mean_g - mean) ** 2))
    ss_within = float(np.sum((y - mean_g[g]) ** 2))
    ss_total = float(np.sum((y - mean) ** 2))
    value = ss_between / ss_total if ss_total > 0 else 0.0
    return EtaSquared(min(max(value, 0.0), 1.0), ss_between, ss_within, ss_total)


def weekly_eta_table(zf: ZoneFrame, partition: Partition, start=None, end=None) -> pd.DataFrame:
    """Eta squared by ISO calendar week, grouping zones by MFA and by district.

    The response of a week is each zone's 7-day count on the last available
    date of that week, so both groupings see the same values. The residual
    territory is one MFA group.
    """
    labels = zf.labels_for(partition)
    gkz = zf.zones["gkz"].to_numpy()
    dates = [d for d in zf.dates if (start is None or d >= start) and (end is None or d <= end)]
    weeks: dict[tuple, list] = {}
    for d in dates:
        weeks.setdefault(tuple(d.isocalendar())[:2], []).append(d)
    rows = []
    for (year, week), ds in sorted(weeks.items()):
        y = zf.cases_on(max(ds))
        rows.append({
            "MFA": eta_squared(y, labels).value,
            "GKZ": eta_squared(y, gkz).value,
            "date range": f"{min(ds).isoformat()} - {max(ds).isoformat()}",
            "calendar week": week,
        })
    return pd.DataFrame(rows, columns=["MFA", "GKZ", "date range", "calendar week"])


# --------------------------------------------------------------------------
# standardization


def _is_binary(x: np.ndarray) -> bool:
    return bool(np.all((x == 0) | (x == 1)))


def gelman_standardize(x) -> np.ndarray:
    """Centre and divide by two (population) standard deviations.

    0/1 indicators are returned unchanged.
    """
    x = np.asarray(x, dtype=float).ravel()
    if np.unique(x).size < 2:
        raise ValueError("cannot standardize a predictor with zero variance")
    if _is_binary(x):
        return x.copy()
    return (x - x.mean()) / (2.0 * x.std())


class GelmanScaler(TransformerMixin, BaseEstimator):
    """Column-wise :func:`gelman_standardize` with stored moments.

    Attributes
    ----------
    mean_, scale_ : ndarray
        Centre and divisor per column; binary columns get 0 and 1.
    binary_ : ndarray of bool
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.binary_ = np.array([_is_binary(c) for c in X.T])
        self.mean_ = np.where(self.binary_, 0.0, X.mean(axis=0))
        sd = X.std(axis=0)
        if np.any((sd == 0) & ~self.binary_):
            raise ValueError("cannot standardize a predictor with zero variance")
        self.scale_ = np.where(self.binary_, 1.0, 2.0 * sd)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=np.float64)
        return (X - self.mean_) / self.scale_


# --------------------------------------------------------------------------
# regression


@dataclass(frozen=True, eq=False)
class RegressionResult:
    """Fixed-effect estimates of one fitted model."""

    model: str
    names: tuple
    estimates: np.ndarray
    se: np.ndarray
    pvalues: np.ndarray
    n: int
    date: dt.date | None = None
    statistic: np.ndarray | None = None
    adj_r2: float = float("nan")
    df_resid: int = 0
    residual_variance: float = float("nan")
    group_variance: float | None = None
    variance_ratio: float | None = None
    singular: bool = False
    loglik: float | None = None
    n_groups: int | None = None
    notes: dict = field(default_factory=dict)

    def __getitem__(self, name):
        k = self.names.index(name)
        return self.estimates[k], self.se[k], self.pvalues[k]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "term": list(self.names),
            "estimate": self.estimates,
            "se": self.se,
            "p": self.pvalues,
        })


def _two_sided(stat_abs, est, se, dist):
    p = np.empty_like(est)
    ok = se > 0
    p[ok] = 2.0 * dist.sf(stat_abs[ok])
    p[~ok] = np.where(est[~ok] == 0, 1.0, 0.0)
    return np.clip(p, 0.0, 1.0)


def _check_rank(X: np.ndarray, names) -> None:
    n, p = X.shape
    if n <= p:
        raise RankDeficientError(f"{n} observations for {p} coefficients")
    rank = np.linalg.matrix_rank(X)
    if rank < p:
        constant = [nm for nm, col in zip(names, X.T) if nm != "(Intercept)" and np.ptp(col) == 0]
        hint = f"; constant column(s): {', '.join(constant)}" if constant else ""
        raise RankDeficientError(f"design matrix has rank {rank} < {p}{hint}")


def ols_fit(X, y, names=None, date=None) -> RegressionResult:
    """Least squares through a QR decomposition, with classical errors and
    two-sided t-test p-values on ``n - p`` degrees of freedom."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{k}" for k in range(p))
    _check_rank(X, names)
    q, r = np.linalg.qr(X)
    beta = linalg.solve_triangular(r, q.T @ y)
    resid = y - X @ beta
    df = n - p
    rss = float(resid @ resid)
    if rss <= 1e-24 * max(float(y @ y), 1.0):
        rss = 0.0  # exact fit up to rounding
    s2 = rss / df
    r_inv = linalg.solve_triangular(r, np.eye(p))
    cov = s2 * (r_inv @ r_inv.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    tval = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
    pvals = _two_sided(np.abs(tval), beta, se, sps.t(df))
    tss = float(np.sum((y - y.mean()) ** 2))
    adj = 1.0 - (rss / df) / (tss / (n - 1)) if tss > 0 else float("nan")
    return RegressionResult("ols", names, beta, se, pvals, n, date=date, statistic=tval,
                            adj_r2=adj, df_resid=df, residual_variance=s2)


class _RemlProblem:
    """Profiled restricted likelihood of ``y = X b + Z u + e`` with one
    random intercept per group, as a function of ``theta = var(u)/var(e)``.

    ``V = I + theta Z Z'`` is block-diagonal, so its inverse and determinant
    follow from group sizes and group sums in O(n) per evaluation.
    """

    def __init__(self, X, y, g):
        self.X, self.y, self.g = X, y, g
        self.n, self.p = X.shape
        self.n_g = np.bincount(g).astype(float)
        self.G = self.n_g.size
        self.XtX = X.T @ X
        self.Xty = X.T @ y
        self.S = np.vstack([np.bincount(g, weights=X[:, k], minlength=self.G) for k in range(self.p)])
        self.t = np.bincount(g, weights=y, minlength=self.G)

    def solve(self, theta):
        c = theta / (1.0 + theta * self.n_g)
        A = self.XtX - (self.S * c) @ self.S.T
        b = self.Xty - self.S @ (c * self.t)
        chol = linalg.cho_factor(A)
        beta = linalg.cho_solve(chol, b)
        r = self.y - self.X @ beta
        rs = np.bincount(self.g, weights=r, minlength=self.G)
        quad = float(r @ r - np.sum(c * rs * rs))
        logdet_a = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
        return beta, chol, quad, logdet_a, c

    def loglik(self, theta):
        _, _, quad, logdet_a, _ = self.solve(theta)
        dfr = self.n - self.p
        if quad <= 1e-24 * max(float(self.y @ self.y), 1.0):
            return float("inf")
        logdet_v = float(np.sum(np.log1p(theta * self.n_g)))
        return -0.5 * (logdet_v + logdet_a + dfr * (math.log(quad / dfr) + 1.0 + math.log(2 * math.pi)))


def random_intercept_fit(X, y, groups, names=None, date=None, tol=1e-8, theta_max=1e8) -> RegressionResult:
    """Random-intercept linear model fit by profiled REML.

    The variance ratio ``theta`` is located on a log-spaced grid and refined
    by bounded Brent search to ``tol`` (absolute on ``theta``). Fixed
    effects are GLS estimates at the optimum; p-values are two-sided Wald
    z-tests. A zero-variance optimum is reported with ``singular=True`` and
    fixed effects identical to OLS.

    Raises
    ------
    RankDeficientError
    ConvergenceError
        If the likelihood keeps increasing up to ``theta_max``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{k}" for k in range(p))
    _check_rank(X, names)
    _, g = np.unique(np.asarray(groups), return_inverse=True)
    if g.max() + 1 < 2:
        raise ValueError("random intercepts need at least two groups")
    prob = _RemlProblem(X, y, g)
    if not np.isfinite(prob.loglik(0.0)):
        # exact fit: no residual variation to split, report the OLS solution
        beta, _, _, _, _ = prob.solve(0.0)
        zero = np.zeros(p)
        return RegressionResult(
            "random_intercept", names, beta, zero, _two_sided(zero, beta, zero, sps.norm()), n,
            date=date, statistic=zero, df_resid=n - p, residual_variance=0.0, group_variance=0.0,
            variance_ratio=0.0, singular=True, loglik=float("inf"), n_groups=int(g.max() + 1),
        )

    grid = np.concatenate([[0.0], np.logspace(-8, math.log10(theta_max), 81)])
    ll = np.array([prob.loglik(t) for t in grid])
    k = int(np.argmax(ll))
    if k == grid.size - 1:
        raise ConvergenceError(
            "restricted likelihood still increasing at the largest variance ratio",
            {"theta": float(grid[-1]), "loglik": float(ll[-1])},
        )
    lo = grid[max(k - 1, 0)]
    hi = grid[k + 1]
    opt = optimize.minimize_scalar(lambda t: -prob.loglik(t), bounds=(lo, hi), method="bounded",
                                   options={"xatol": tol, "maxiter": 2000})
    theta, best = float(opt.x), float(-opt.fun)
    if ll[k] > best:
        theta, best = float(grid[k]), float(ll[k])
    ll0 = float(ll[0])
    singular = theta <= tol or ll0 >= best
    if singular:
        theta, best = 0.0, ll0

    beta, chol, quad, _, _ = prob.solve(theta)
    s2 = quad / (n - p)
    cov = s2 * linalg.cho_solve(chol, np.eye(p))
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    z = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
    pvals = _two_sided(np.abs(z), beta, se, sps.norm())
    return RegressionResult(
        "random_intercept", names, beta, se, pvals, n, date=date, statistic=z,
        df_resid=n - p, residual_variance=s2, group_variance=s2 * theta,
        variance_ratio=theta, singular=singular, loglik=best, n_groups=int(g.max() + 1),
    )


def _response(cases: np.ndarray, drop_zero: bool):
    if drop_zero:
        keep = cases > 0
        return np.log(cases[keep]), keep
    return np.log1p(cases), np.ones(cases.size, dtype=bool)


def fit_mfa_indicator_model(zf: ZoneFrame, partition: Partition, date, drop_zero=False) -> RegressionResult:
    """OLS of ``log(1 + cases_7d)`` on an intercept, MFA membership and
    standardized population."""
    labels = zf.labels_for(partition)
    y, keep = _response(zf.cases_on(date), drop_zero)
    if keep.sum() < 3:
        raise ValueError("the indicator model needs at least three zones")
    mfa_ind = (labels[keep] != RESIDUAL).astype(float)
    pop = gelman_standardize(zf.zones["population"].to_numpy(dtype=float)[keep])
    X = np.column_stack([np.ones(keep.sum()), mfa_ind, pop])
    return ols_fit(X, y, ("(Intercept)", "mfaInd", "population"), date=date)


def fit_mfa_random_intercept_model(zf: ZoneFrame, partition: Partition, date, drop_zero=False) -> RegressionResult:
    """REML fit of ``log(1 + cases_7d)`` on MFA dummies (reference: residual
    territory) and standardized population with a random intercept per
    district."""
    labels = zf.labels_for(partition)
    y, keep = _response(zf.cases_on(date), drop_zero)
    labels = labels[keep]
    gkz = zf.zones["gkz"].to_numpy()[keep]
    if np.unique(gkz).size < 2:
        raise ValueError("the random-intercept model needs at least two districts")
    mfas = sorted(int(k) for k in np.unique(labels) if k != RESIDUAL)
    if not mfas or np.unique(labels).size < 2:
        raise ValueError("the random-intercept model needs at least two MFA levels")
    pop = gelman_standardize(zf.zones["population"].to_numpy(dtype=float)[keep])
    cols = [np.ones(labels.size)] + [(labels == k).astype(float) for k in mfas] + [pop]
    names = ("(Intercept)", *(f"mfa_{k}" for k in mfas), "population")
    return random_intercept_fit(np.column_stack(cols), y, gkz, names, date=date)


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else format(float(x), ".10g")


@dataclass(eq=False)
class CoefficientTimeline:
    """Per-date fits of both models.

    ``failures`` lists ``(date, model, error type, message)`` for every fit
    that raised; those dates are absent from the corresponding dict.
    """

    dates: list
    ols: dict
    random_intercept: dict
    failures: list
    alpha: float = SIGNIFICANCE

    def coefficients(self, model: str = "ols") -> pd.DataFrame:
        fits = self.ols if model == "ols" else self.random_intercept
        rows = []
        for d in self.dates:
            res = fits.get(d)
            if res is None:
                continue
            for name, est, se, p in zip(res.names, res.estimates, res.se, res.pvalues):
                rows.append({"date": d, "term": name, "estimate": est, "se": se, "p": p})
        return pd.DataFrame(rows, columns=["date", "term", "estimate", "se", "p"])

    def fit_summary(self) -> pd.DataFrame:
        rows = []
        for d in self.dates:
            o = self.ols.get(d)
            r = self.random_intercept.get(d)
            rows.append({
                "date": d,
                "ols_adj_r2": o.adj_r2 if o else float("nan"),
                "ri_variance_ratio": r.variance_ratio if r else float("nan"),
                "ri_group_variance": r.group_variance if r else float("nan"),
                "ri_residual_variance": r.residual_variance if r else float("nan"),
                "ri_singular": r.singular if r else None,
            })
        return pd.DataFrame(rows)

    def significance_grid(self) -> pd.DataFrame:
        """``date, mfa_id, class`` from the random-intercept MFA coefficients."""
        rows = []
        for d in self.dates:
            res = self.random_intercept.get(d)
            if res is None:
                continue
            for name, est, p in zip(res.names, res.estimates, res.pvalues):
                if not name.startswith("mfa_"):
                    continue
                if p < self.alpha:
                    cls = "positive" if est > 0 else "negative"
                else:
                    cls = "not_significant"
                rows.append({"date": d, "mfa_id": int(name[4:]), "class": cls})
        return pd.DataFrame(rows, columns=["date", "mfa_id", "class"])


def coefficient_timeline(zf: ZoneFrame, partition: Partition, dates=None, drop_zero=False,
                         alpha=SIGNIFICANCE) -> CoefficientTimeline:
    """Fit both models on every date; a failing date is recorded and skipped."""
    dates = zf.dates if dates is None else list(dates)
    ols, ri, failures = {}, {}, []
    for d in dates:
        for model, fn, store in (("ols", fit_mfa_indicator_model, ols),
                                 ("random_intercept", fit_mfa_random_intercept_model, ri)):
            try:
                store[d] = fn(zf, partition, d, drop_zero=drop_zero)
            except (ValueError, ConvergenceError, np.linalg.LinAlgError) as exc:
                failures.append((d, model, type(exc).__name__, str(exc)))
    return CoefficientTimeline(list(dates), ols, ri, failures, alpha)


def mfa_classes(grid: pd.DataFrame, mfa_ids) -> dict[int, str]:
    """One class per MFA over the whole grid: negative if ever significantly
    negative, else positive if ever significantly positive."""
    out = {}
    for k in mfa_ids:
        seen = set(grid.loc[grid["mfa_id"] == k, "class"]) if len(grid) else set()
        out[k] = "negative" if "negative" in seen else "positive" if "positive" in seen else "not_significant"
    return out


def summarize_mfas(zf: ZoneFrame, partition: Partition, grid: pd.DataFrame, date=None) -> pd.DataFrame:
    """Quartiles of MFA population and cases by significance class.

    MFA totals are sums over member zones; cases are taken on ``date``
    (default: the last date of the grid, else of the case table). Quartiles
    follow linear interpolation between order statistics. Empty classes give
    NaN statistics.
    """
    labels = zf.labels_for(partition)
    if date is None:
        date = max(grid["date"]) if len(grid) else zf.dates[-1]
    pop = zf.zones["population"].to_numpy(dtype=float)
    cases = zf.cases_on(date)
    mfa_ids = sorted(int(k) for k in np.unique(labels) if k != RESIDUAL)
    classes = mfa_classes(grid, mfa_ids)
    rows = []
    for measure, values in (("population", pop), ("cases", cases)):
        totals = {k: float(values[labels == k].sum()) for k in mfa_ids}
        for cls in CLASSES:
            v = np.array([totals[k] for k in mfa_ids if classes[k] == cls])
            if v.size:
                q1, med, q3 = np.percentile(v, [25, 50, 75])
                stats_ = (q1, med, float(v.mean()), q3)
            else:
                stats_ = (float("nan"),) * 4
            rows.append({"measure": measure, "class": cls, "n_mfas": int(v.size),
                         "q1": stats_[0], "median": stats_[1], "mean": stats_[2], "q3": stats_[3]})
    return pd.DataFrame(rows, columns=["measure", "class", "n_mfas", "q1", "median", "mean", "q3"])


# --------------------------------------------------------------------------
# estimator interface


class MfaIndicatorOLS(RegressorMixin, BaseEstimator):
    """OLS with an intercept and Gelman-standardized continuous predictors.

    Parameters
    ----------
    standardize : bool, default=True
        Apply :class:`GelmanScaler` to the columns of ``X`` (binary columns
        pass through).

    Attributes
    ----------
    intercept_ : float
    coef_ : ndarray of shape (n_features,)
    bse_, pvalues_ : ndarray of shape (n_features + 1,)
        Standard errors and p-values, intercept first.
    rsquared_adj_ : float
    result_ : RegressionResult
    """

    def __init__(self, standardize=True):
        self.standardize = standardize

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.scaler_ = GelmanScaler().fit(X) if self.standardize else None
        Xs = self.scaler_.transform(X) if self.scaler_ is not None else X
        names = ("(Intercept)", *(f"x{k}" for k in range(X.shape[1])))
        self.result_ = ols_fit(np.column_stack([np.ones(len(y)), Xs]), y, names)
        self.intercept_ = float(self.result_.estimates[0])
        self.coef_ = self.result_.estimates[1:].copy()
        self.bse_ = self.result_.se.copy()
        self.pvalues_ = self.result_.pvalues.copy()
        self.rsquared_adj_ = self.result_.adj_r2
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        Xs = self.scaler_.transform(X) if self.scaler_ is not None else X
        return self.intercept_ + Xs @ self.coef_


class RandomInterceptModel(RegressorMixin, BaseEstimator):
    """Linear model with one random intercept per group, fit by profiled REML.

    ``fit(X, y, groups=...)`` adds an intercept column to ``X``. ``predict``
    returns the fixed-effect part.

    Attributes
    ----------
    intercept_, coef_, bse_, pvalues_
        As in :class:`MfaIndicatorOLS`; p-values are Wald z-tests.
    variance_ratio_ : float
        Group variance divided by residual variance.
    group_variance_, residual_variance_ : float
    singular_ : bool
        True when the group variance is estimated as zero.
    """

    def __init__(self, tol=1e-8):
        self.tol = tol

    def fit(self, X, y, groups=None):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if groups is None:
            raise ValueError("groups are required")
        groups = np.asarray(groups)
        if groups.shape[0] != X.shape[0]:
            raise ValueError("groups must label every row of X")
        names = ("(Intercept)", *(f"x{k}" for k in range(X.shape[1])))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            self.result_ = random_intercept_fit(np.column_stack([np.ones(len(y)), X]), y, groups, names, tol=self.tol)
        r = self.result_
        self.intercept_ = float(r.estimates[0])
        self.coef_ = r.estimates[1:].copy()
        self.bse_ = r.se.copy()
        self.pvalues_ = r.pvalues.copy()
        self.variance_ratio_ = r.variance_ratio
        self.group_variance_ = r.group_variance
        self.residual_variance_ = r.residual_variance
        self.singular_ = r.singular
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return self.intercept_ + X @ self.coef_
