"""Self-contained statistical primitives.

Implements the two-sample tests that drive the monotonicity scoring plus the
small set of descriptive helpers (confidence intervals, percentiles, kernel
density estimates) used by the report writers.  Everything here is written
against plain numpy so the test suite can check it against independent
oracles; nothing in this module imports scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NumericError, UsageError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class TestResult(NamedTuple):
    statistic: float
    p_value: float


@dataclass(frozen=True)
class ConfidenceInterval:
    mean: float
    half_width: float
    relative_error: float


def standard_normal_cdf(x: float) -> float:
    """CDF of the standard normal distribution, accurate to machine precision."""
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Lentz's algorithm for the continued fraction in I_x(a, b)
    # (Numerical Recipes 6.4).
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise NumericError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if a <= 0 or b <= 0:
        raise UsageError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_cdf(x: float, df: float) -> float:
    """CDF of Student's t distribution with ``df`` degrees of freedom."""
    if df <= 0:
        raise UsageError("degrees of freedom must be positive")
    if math.isinf(x):
        return 0.0 if x < 0 else 1.0
    ib = regularized_incomplete_beta(0.5 * df, 0.5, df / (df + x * x))
    return 1.0 - 0.5 * ib if x >= 0 else 0.5 * ib


def student_t_ppf(q: float, df: float) -> float:
    """Quantile of Student's t distribution, solved by bisection on the CDF."""
    if not 0.0 < q < 1.0:
        raise UsageError("quantile must lie strictly inside (0, 1)")
    if q == 0.5:
        return 0.0
    # Solve for the positive tail and mirror.
    target = q if q > 0.5 else 1.0 - q
    lo, hi = 0.0, 1.0
    while student_t_cdf(hi, df) < target:
        hi *= 2.0
        if hi > 1e12:
            raise NumericError("t quantile bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    x = 0.5 * (lo + hi)
    return x if q > 0.5 else -x


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Welch t test for unequal variances.

    Returns the t statistic (positive when ``a`` has the larger mean) and the
    two-sided p-value from the Student-t CDF with Welch-Satterthwaite degrees
    of freedom.  When both samples have zero variance the test degenerates:
    equal means give (0, 1), unequal means give (+-inf, 0).
    """
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.size < 2 or xb.size < 2:
        raise UsageError("welch_t_test needs at least two values per sample")
    na, nb = xa.size, xb.size
    ma, mb = float(xa.mean()), float(xb.mean())
    sa = float(xa.var(ddof=1)) / na
    sb = float(xb.var(ddof=1)) / nb
    denom = sa + sb
    if denom == 0.0:
        if ma == mb:
            return TestResult(0.0, 1.0)
        return TestResult(math.copysign(math.inf, ma - mb), 0.0)
    t = (ma - mb) / math.sqrt(denom)
    # Welch-Satterthwaite df in ratio form: sa/denom and sb/denom sum to 1,
    # so the denominator cannot underflow even when sa, sb are subnormal
    ra, rb = sa / denom, sb / denom
    df = 1.0 / (ra * ra / (na - 1) + rb * rb / (nb - 1))
    p = 2.0 * (1.0 - student_t_cdf(abs(t), df))
    return TestResult(t, min(max(p, 0.0), 1.0))


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the average of their ranks."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # ranks i+1 .. j+1 averaged
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def rank_sum_test(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Wilcoxon rank-sum test, normal approximation.

    Ties receive midranks and the rank variance carries the usual tie
    correction; a continuity correction of 0.5 shrinks the rank-sum deviation
    toward zero before the z statistic is formed.  The statistic keeps the
    sign of (mean rank of a) - (mean rank of b).  Two samples with all values
    identical return (0, 1).
    """
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.size < 1 or xb.size < 1:
        raise UsageError("rank_sum_test needs at least one value per sample")
    n1, n2 = xa.size, xb.size
    combined = np.concatenate([xa, xb])
    n = n1 + n2
    ranks = _midranks(combined)
    r1 = float(ranks[:n1].sum())
    mu = n1 * (n + 1) / 2.0
    # tie correction: sum of (t^3 - t) over tie groups
    _, counts = np.unique(combined, return_counts=True)
    tie_term = float(((counts.astype(float) ** 3) - counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0.0:
        return TestResult(0.0, 1.0)
    d = r1 - mu
    if d == 0.0:
        return TestResult(0.0, 1.0)
    z = (d - math.copysign(0.5, d)) / math.sqrt(var)
    p = 2.0 * (1.0 - standard_normal_cdf(abs(z)))
    return TestResult(z, min(max(p, 0.0), 1.0))


def mean_ci(sample: Sequence[float], confidence: float = 0.95) -> ConfidenceInterval:
    """Student-t confidence interval for the mean of a sample.

    ``relative_error`` is half_width / |mean|.  A zero half width (constant
    sample) reports a relative error of 0 even when the mean is 0; a positive
    half width around a zero mean reports infinity.
    """
    xs = np.asarray(sample, dtype=float)
    if xs.size < 2:
        raise UsageError("mean_ci needs at least two values")
    if not 0.0 < confidence < 1.0:
        raise UsageError("confidence must lie in (0, 1)")
    m = float(xs.mean())
    s = float(xs.std(ddof=1))
    if s == 0.0:
        return ConfidenceInterval(m, 0.0, 0.0)
    half = student_t_ppf(0.5 + 0.5 * confidence, xs.size - 1) * s / math.sqrt(xs.size)
    if m == 0.0:
        rel = math.inf
    else:
        rel = half / abs(m)
    return ConfidenceInterval(m, half, rel)


def percentile(sample: Sequence[float], q: float) -> float:
    """Percentile with linear interpolation at fractional index q/100*(n-1)."""
    xs = np.sort(np.asarray(sample, dtype=float))
    if xs.size == 0:
        raise UsageError("percentile of an empty sample")
    if not 0.0 <= q <= 100.0:
        raise UsageError("percentile rank must lie in [0, 100]")
    pos = q / 100.0 * (xs.size - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, xs.size - 1)
    frac = pos - lo
    return float(xs[lo] + (xs[hi] - xs[lo]) * frac)


@dataclass(frozen=True)
class DensityEstimate:
    """KDE curve on an even grid; ``spike_at`` is set for constant samples."""

    x: np.ndarray
    density: np.ndarray
    spike_at: float | None = None


def gaussian_kde(sample: Sequence[float], grid_points: int = 256) -> DensityEstimate:
    """Gaussian KDE with Silverman bandwidth 1.06 * s * n^(-1/5).

    The curve is evaluated on an even grid spanning [min, max] of the sample.
    A sample with zero variance has no meaningful bandwidth and comes back as
    a spike descriptor instead of a curve.
    """
    xs = np.asarray(sample, dtype=float)
    if xs.size < 2:
        raise UsageError("gaussian_kde needs at least two values")
    if grid_points < 2:
        raise UsageError("grid must have at least two points")
    s = float(xs.std(ddof=1))
    if s == 0.0:
        v = float(xs[0])
        return DensityEstimate(np.empty(0), np.empty(0), spike_at=v)
    bw = 1.06 * s * xs.size ** (-0.2)
    grid = np.linspace(float(xs.min()), float(xs.max()), grid_points)
    z = (grid[:, None] - xs[None, :]) / bw
    density = np.exp(-0.5 * z * z).sum(axis=1) / (xs.size * bw * _SQRT2PI)
    return DensityEstimate(grid, density)
