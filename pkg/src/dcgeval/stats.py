"""Statistical machinery for day-series correlation and A/B sensitivity.

Day series are short (tens of points), so everything here is closed-form:
Pearson correlation with the exact Student-t two-tailed p-value (t CDF via
the regularized incomplete beta function), Kendall tau-b for rank agreement,
and unpaired Welch comparisons with normal-approximation confidence
intervals. A comparison is called significant only when the lower CI bound
clears zero, matching how the sensitivity analysis counts true positives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import UndefinedStatisticError


def _check_series(values, name: str, min_n: int = 2) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if len(arr) < min_n:
        raise ValueError(f"{name} needs at least {min_n} values, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile probability must be in (0, 1), got {p}")
    return float(special.ndtri(p))


def student_t_cdf(t: float, df: int) -> float:
    """CDF of Student's t via the regularized incomplete beta function."""
    if df < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {df}")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * float(special.betainc(df / 2.0, 0.5, x))
    return 1.0 - tail if t > 0 else tail


def pearson_r(x, y) -> float:
    """Pearson correlation; constant series make it undefined."""
    x = _check_series(x, "x")
    y = _check_series(y, "y")
    if len(x) != len(y):
        raise ValueError("series lengths differ")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedStatisticError("correlation is undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson_p_two_tailed(r: float, n: int) -> float:
    """Two-tailed p-value for a Pearson r from n pairs (t with n-2 df)."""
    if n < 3:
        raise ValueError(f"p-value needs n >= 3, got {n}")
    if abs(r) > 1.0 + 1e-12:
        raise ValueError(f"correlation must be in [-1, 1], got {r}")
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    t_sq = r * r * df / (1.0 - r * r)
    # 2 * (1 - T_cdf(|t|, df)) collapses to one incomplete-beta evaluation
    return float(special.betainc(df / 2.0, 0.5, df / (df + t_sq)))


def kendall_tau(x, y) -> float:
    """Kendall tau-b by direct pair counting (series here are short).

    tau-b = (concordant - discordant) / sqrt((n0 - t_x) * (n0 - t_y)) with
    n0 = n(n-1)/2 and t_x, t_y the tied-pair counts; on tie-free data this is
    exactly (concordant - discordant) / n0.
    """
    x = _check_series(x, "x")
    y = _check_series(y, "y")
    if len(x) != len(y):
        raise ValueError("series lengths differ")
    n = len(x)
    xs = x.tolist()
    ys = y.tolist()
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx == 0.0:
                ties_x += 1
            if dy == 0.0:
                ties_y += 1
            if dx == 0.0 or dy == 0.0:
                continue
            if (dx > 0.0) == (dy > 0.0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom_sq = (n0 - ties_x) * (n0 - ties_y)
    if denom_sq == 0:
        raise UndefinedStatisticError("tau is undefined when a series is all ties")
    return (concordant - discordant) / math.sqrt(denom_sq)


@dataclass(frozen=True)
class ComparisonResult:
    """Unpaired Welch comparison of arm B against arm A (diff = mean B - mean A)."""

    label: str
    mean_diff: float
    ci_low: float
    ci_high: float
    p_one_sided: float
    significant: bool

    @property
    def sign_positive(self) -> bool:
        return self.mean_diff > 0.0


def compare_means(a, b, alpha: float, label: str = "") -> ComparisonResult:
    """Welch comparison with a normal two-sided (1 - alpha) CI.

    p_one_sided tests improvement (B > A): Phi(-diff / se). Zero standard
    error degenerates gracefully: the CI collapses onto the difference and p
    is 0, 0.5, or 1 by the difference's sign. significant means ci_low > 0.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    a = _check_series(a, "a")
    b = _check_series(b, "b")
    diff = float(b.mean() - a.mean())
    se = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    z = normal_quantile(1.0 - alpha / 2.0)
    if se == 0.0:
        p = 0.5 if diff == 0.0 else (0.0 if diff > 0 else 1.0)
        return ComparisonResult(label, diff, diff, diff, p, significant=diff > 0.0)
    return ComparisonResult(
        label=label,
        mean_diff=diff,
        ci_low=diff - z * se,
        ci_high=diff + z * se,
        p_one_sided=normal_cdf(-diff / se),
        significant=diff - z * se > 0.0,
    )


@dataclass(frozen=True)
class SensitivitySummary:
    """How a set of known-true-positive comparisons came out."""

    tpr: float
    sign_agreement: float
    mean_p: float
    n_comparisons: int


def sensitivity_summary(results, all_true_positive: bool) -> SensitivitySummary:
    """Summarize comparisons whose ground truth is a real improvement.

    The caller must assert all_true_positive (e.g. via exact policy values);
    the true-positive rate is meaningless otherwise, so this refuses to run.
    """
    results = list(results)
    if not results:
        raise ValueError("sensitivity_summary needs at least one comparison")
    if not all_true_positive:
        raise ValueError(
            "sensitivity_summary requires every comparison to be a verified true positive"
        )
    n = len(results)
    return SensitivitySummary(
        tpr=sum(1 for r in results if r.significant) / n,
        sign_agreement=sum(1 for r in results if r.sign_positive) / n,
        mean_p=sum(r.p_one_sided for r in results) / n,
        n_comparisons=n,
    )


COMPARISON_HEADER = "label,mean_diff,ci_low,ci_high,p_one_sided,significant"


def comparison_csv_row(c: ComparisonResult) -> str:
    return ",".join(
        [
            c.label,
            repr(c.mean_diff),
            repr(c.ci_low),
            repr(c.ci_high),
            repr(c.p_one_sided),
            "true" if c.significant else "false",
        ]
    )
