"""Inferential statistics for relating match scores to poll changes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .errors import UndefinedError, ValidationError
from .matching import MatchScore
from .polls import PollWindowDiff

EXACT_MWU_LIMIT = 8
FACTORS = ("candidate", "election_year")


# ---------------------------------------------------------------------------
# Mann-Whitney U


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    p_value: float
    method: str  # "exact" or "normal"


def _u_distribution(m: int, n: int) -> list[int]:
    """Counts of rank arrangements giving each U = 0..m*n (no ties).

    Coefficients of the Gaussian binomial [m+n choose m] in q, built as
    prod_{i=1..m} (1 - q^(n+i)) / (1 - q^i) with exact integer steps.
    """
    if m > n:
        m, n = n, m
    size = m * n + 1
    coef = [0] * size
    coef[0] = 1
    for i in range(1, m + 1):
        shift = n + i
        for k in range(size - 1, shift - 1, -1):
            coef[k] -= coef[k - shift]
        for k in range(i, size):
            coef[k] += coef[k - i]
    return coef


def _rank(values: np.ndarray) -> np.ndarray:
    return sps.rankdata(values, method="average")


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> MannWhitneyResult:
    """Two-sided Mann-Whitney test; U counts pairs with a > b (ties as 1/2).

    The p-value is exact when the smaller sample has at most eight values
    and there are no ties; otherwise the tie-corrected normal approximation
    with continuity correction is used.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValidationError("Mann-Whitney U needs two nonempty samples")
    m, n = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _rank(pooled)
    u = float(ranks[:m].sum() - m * (m + 1) / 2)
    _, tie_counts = np.unique(pooled, return_counts=True)
    has_ties = bool((tie_counts > 1).any())
    if min(m, n) <= EXACT_MWU_LIMIT and not has_ties:
        dist = _u_distribution(m, n)
        k = int(round(u))
        total = sum(dist)
        c_le = sum(dist[: k + 1])
        c_ge = sum(dist[k:])
        return MannWhitneyResult(u, min(1.0, (2 * min(c_le, c_ge)) / total), "exact")
    big_n = m + n
    tie_term = float((tie_counts.astype(float) ** 3 - tie_counts).sum()) / (big_n * (big_n - 1))
    var = m * n / 12.0 * ((big_n + 1) - tie_term)
    if var <= 0:
        return MannWhitneyResult(u, 1.0, "normal")
    z = max(abs(u - m * n / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return MannWhitneyResult(u, min(1.0, 2.0 * sps.norm.sf(z)), "normal")


# ---------------------------------------------------------------------------
# t-test


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p_value: float
    eta_squared: float
    equal_var: bool


def eta_squared(t: float, df: float) -> float:
    return float(t * t / (t * t + df))


def t_test(sample_a: Sequence[float], sample_b: Sequence[float], equal_var: bool = False) -> TTestResult:
    """Two-sample t-test, Welch by default; ``equal_var`` selects Student's pooled form."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    n1, n2 = a.size, b.size
    if n1 < 2 or n2 < 2:
        raise ValidationError("t-test needs at least two observations per sample")
    m1, m2 = a.mean(), b.mean()
    # t and df are unchanged by a common rescaling; working in units of the
    # largest deviation keeps tiny spreads out of subnormal range
    scale = max(np.abs(a - m1).max(), np.abs(b - m2).max())
    if scale == 0:
        raise UndefinedError("t-test is degenerate: both samples have zero variance")
    d1, d2 = (a - m1) / scale, (b - m2) / scale
    v1, v2 = float(d1 @ d1) / (n1 - 1), float(d2 @ d2) / (n2 - 1)
    diff = (m1 - m2) / scale
    if equal_var:
        df = float(n1 + n2 - 2)
        sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        se = math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
    else:
        q1, q2 = v1 / n1, v2 / n2
        se = math.sqrt(q1 + q2)
        df = (q1 + q2) ** 2 / (q1 * q1 / (n1 - 1) + q2 * q2 / (n2 - 1))
    t = diff / se
    p = min(1.0, 2.0 * sps.t.sf(abs(t), df))
    return TTestResult(float(t), float(df), float(p), eta_squared(t, df), equal_var)


# ---------------------------------------------------------------------------
# correlation and simple regression


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("pearson_r needs two 1-D sequences of equal length")
    if x.size < 3:
        raise ValidationError("pearson_r needs at least 3 points")
    dx, dy = x - x.mean(), y - y.mean()
    ax, ay = np.abs(dx).max(), np.abs(dy).max()
    if ax == 0 or ay == 0:
        raise UndefinedError("correlation undefined for a constant input")
    # r is scale-free; normalizing first keeps tiny inputs from underflowing
    dx, dy = dx / ax, dy / ay
    r = float(dx @ dy) / math.sqrt(float(dx @ dx) * float(dy @ dy))
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class RegressionBand:
    slope: float
    intercept: float
    x: np.ndarray
    fit: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    residual_df: int
    confidence: float


def simple_regression_band(
    x: Sequence[float], y: Sequence[float], confidence: float = 0.95, at: Sequence[float] | None = None
) -> RegressionBand:
    """Least-squares line with a confidence band for the mean response."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 3 or y.size != n:
        raise ValidationError("regression needs at least 3 paired points")
    xbar, ybar = x.mean(), y.mean()
    sxx = float(((x - xbar) ** 2).sum())
    if sxx == 0:
        raise UndefinedError("regression undefined for constant x")
    slope = float(((x - xbar) * (y - ybar)).sum()) / sxx
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    df = n - 2
    s2 = float(resid @ resid) / df
    grid = x if at is None else np.asarray(at, dtype=float)
    fit = intercept + slope * grid
    half = sps.t.ppf(0.5 + confidence / 2.0, df) * np.sqrt(s2 * (1.0 / n + (grid - xbar) ** 2 / sxx))
    return RegressionBand(slope, float(intercept), grid, fit, fit - half, fit + half, df, confidence)


# ---------------------------------------------------------------------------
# fixed-effects regression (least squares with dummy variables)


@dataclass(frozen=True)
class PanelRow:
    candidate: str
    election_year: int
    debate_id: str
    z: float
    p_diff: float

    def __post_init__(self):
        if not (math.isfinite(self.z) and math.isfinite(self.p_diff)):
            raise ValidationError(f"non-finite panel value for {self.candidate!r} in {self.debate_id!r}")


@dataclass(frozen=True)
class RegressionResult:
    names: tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adjusted_r_squared: float
    residual_df: int
    n_obs: int
    factors: tuple[str, ...]
    absorbed_levels: dict = field(default_factory=dict)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def index(self, name: str) -> int:
        return self.names.index(name)

    def conf_int(self, name: str, confidence: float = 0.95) -> tuple[float, float]:
        i = self.names.index(name)
        half = sps.t.ppf(0.5 + confidence / 2.0, self.residual_df) * self.std_errors[i]
        return float(self.coefficients[i] - half), float(self.coefficients[i] + half)


def _design(panel: Sequence[PanelRow], factors: Sequence[str]):
    names = ["intercept", "z"]
    cols = [np.ones(len(panel)), np.array([r.z for r in panel])]
    absorbed = {}
    for f in factors:
        values = [getattr(r, f) for r in panel]
        levels = sorted(set(values), key=lambda v: (str(type(v)), v))
        absorbed[f] = tuple(levels)
        for lvl in levels[1:]:
            names.append(f"{f}[{lvl}]")
            cols.append(np.array([1.0 if v == lvl else 0.0 for v in values]))
    return names, np.column_stack(cols), absorbed


def _collinear_columns(x: np.ndarray, names: Sequence[str]) -> list[str]:
    bad = []
    kept: list[int] = []
    for j in range(x.shape[1]):
        trial = x[:, kept + [j]]
        if np.linalg.matrix_rank(trial) == len(kept) + 1:
            kept.append(j)
        else:
            bad.append(names[j])
    return bad


def fixed_effects_ols(panel: Sequence[PanelRow], factors: Iterable[str] = ()) -> RegressionResult:
    """Regress poll change on mean z with dummy-encoded fixed effects.

    One dummy per level of each factor, first level (sorted) dropped, with
    an intercept.  R-squared figures are for the full dummy model.
    """
    factors = tuple(factors)
    for f in factors:
        if f not in FACTORS:
            raise ValidationError(f"unknown factor {f!r}; expected a subset of {FACTORS}")
    if len(set(factors)) != len(factors):
        raise ValidationError("factor listed twice")
    panel = list(panel)
    for f in factors:
        levels: dict = {}
        for r in panel:
            levels[getattr(r, f)] = levels.get(getattr(r, f), 0) + 1
        thin = sorted(str(k) for k, v in levels.items() if v < 2)
        if thin:
            raise ValidationError(f"{f} levels with fewer than 2 rows: {', '.join(thin)}")
    names, x, absorbed = _design(panel, factors)
    y = np.array([r.p_diff for r in panel])
    n, k = x.shape
    if np.linalg.matrix_rank(x) < k:
        raise ValidationError(f"rank-deficient design; collinear columns: {', '.join(_collinear_columns(x, names))}")
    df = n - k
    if df < 1:
        raise ValidationError(f"no residual degrees of freedom ({n} rows, {k} columns)")
    q, r_mat = np.linalg.qr(x)
    beta = np.linalg.solve(r_mat, q.T @ y)
    resid = y - x @ beta
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    sigma2 = rss / df
    r_inv = np.linalg.inv(r_mat)
    se = np.sqrt(sigma2 * np.sum(r_inv * r_inv, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = np.clip(2.0 * sps.t.sf(np.abs(t), df), 0.0, 1.0)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / df
    return RegressionResult(tuple(names), beta, se, t, p, r2, adj, df, n, factors, absorbed)


# ---------------------------------------------------------------------------
# matcher / non-matcher split


def mean_ci(values: Sequence[float], confidence: float = 0.95) -> tuple[float, float | None, float | None]:
    """Mean and t-based confidence interval; interval is None below two values."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValidationError("mean of an empty sample")
    mean = float(v.mean())
    if v.size < 2:
        return mean, None, None
    half = sps.t.ppf(0.5 + confidence / 2.0, v.size - 1) * float(v.std(ddof=1)) / math.sqrt(v.size)
    return mean, mean - half, mean + half


@dataclass(frozen=True)
class GroupSummary:
    name: str
    values: tuple[float, ...]
    mean: float | None
    median: float | None
    ci_low: float | None
    ci_high: float | None

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def empty(self) -> bool:
        return not self.values


def summarize_group(name: str, values: Sequence[float], confidence: float = 0.95) -> GroupSummary:
    values = tuple(float(v) for v in values)
    if not values:
        return GroupSummary(name, (), None, None, None, None)
    mean, lo, hi = mean_ci(values, confidence)
    return GroupSummary(name, values, mean, float(np.median(values)), lo, hi)


@dataclass(frozen=True)
class MatchingGroups:
    matchers: GroupSummary
    non_matchers: GroupSummary
    excluded: int  # joined rows with mean_z exactly 0 or undefined


def join_scores(scores: Iterable[MatchScore], diffs: Iterable[PollWindowDiff]) -> list[tuple[MatchScore, PollWindowDiff]]:
    by_key = {(d.debate_id, d.candidate): d for d in diffs}
    out = []
    for s in scores:
        d = by_key.get((s.conversation_id, s.focal_speaker))
        if d is not None:
            out.append((s, d))
    return out


def group_by_matching(
    scores: Iterable[MatchScore], diffs: Iterable[PollWindowDiff], confidence: float = 0.95
) -> MatchingGroups:
    """Split poll changes by the sign of the speaker's mean z."""
    joined = join_scores(scores, diffs)
    if not joined:
        raise ValidationError("no (debate, candidate) pairs shared between scores and poll differences")
    pos = [d.p_diff for s, d in joined if s.mean_z is not None and s.mean_z > 0]
    neg = [d.p_diff for s, d in joined if s.mean_z is not None and s.mean_z < 0]
    excluded = len(joined) - len(pos) - len(neg)
    return MatchingGroups(summarize_group("matcher", pos, confidence), summarize_group("non-matcher", neg, confidence), excluded)
