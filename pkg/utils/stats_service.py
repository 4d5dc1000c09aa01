"""
Statistics helpers shared by the experiments:
- Wilson score intervals for hit fractions
- Normal intervals for sample means
- Two-sample Kolmogorov-Smirnov test
- Two-proportion z-test for censored masses
- Percentile bootstrap for slopes of ensemble-mean curves
"""

import math

import numpy as np
from scipy import stats


def wilson_interval(successes, n, level=0.95):
    """
    Wilson score interval for a binomial proportion

    Args:
        successes (int): Number of successes, 0 <= successes <= n
        n (int): Number of trials, n >= 1
        level (float): Confidence level

    Returns:
        tuple: (lo, hi)
    """
    if n < 1 or not 0 <= successes <= n:
        raise ValueError(f"need 0 <= successes <= n and n >= 1, got {successes}/{n}")
    z = stats.norm.ppf(0.5 + level / 2.0)
    p = successes / n
    z2n = z * z / n
    center = (p + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / (1.0 + z2n)
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def normal_interval(mean, stderr, level=0.95):
    """Normal-approximation interval mean +/- z stderr; NaN bounds when stderr is undefined"""
    if not math.isfinite(stderr):
        return float('nan'), float('nan')
    z = stats.norm.ppf(0.5 + level / 2.0)
    return mean - z * stderr, mean + z * stderr


def binomial_stderr(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else float('nan')


def ks_two_sample(a, b):
    """
    Two-sample KS distance and asymptotic p-value

    Returns:
        tuple: (D, p_value)
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    result = stats.ks_2samp(a, b, method='asymp')
    return float(result.statistic), float(result.pvalue)


def ecdf_distance(a, b):
    """Sup-distance of empirical CDFs, evaluated at every pooled point"""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side='right') / a.size
    fb = np.searchsorted(b, pooled, side='right') / b.size
    return float(np.max(np.abs(fa - fb)))


def two_proportion_test(k1, n1, k2, n2):
    """Pooled two-sided z-test; returns (difference, p_value)"""
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if var <= 0.0:
        return p1 - p2, 1.0
    z = (p1 - p2) / math.sqrt(var)
    return p1 - p2, float(2.0 * stats.norm.sf(abs(z)))


def quantile_summary(values, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95, 0.99)):
    values = np.asarray(values, dtype=float)
    summary = {f"q{int(round(q * 100)):02d}": float(np.quantile(values, q)) for q in quantiles}
    summary['mean'] = float(np.mean(values))
    summary['max'] = float(np.max(values))
    summary['n'] = int(values.size)
    return summary


def slope(grid, curve):
    """Least-squares slope of curve against grid"""
    return float(np.polyfit(np.asarray(grid, dtype=float), np.asarray(curve, dtype=float), 1)[0])


def bootstrap_slope_ci(grid, curves, rng, level=0.99, resamples=200):
    """
    Slope of the ensemble-mean curve with a percentile bootstrap interval

    Args:
        grid (ndarray): Abscissae, shape (K,)
        curves (ndarray): One curve per path, shape (N, K)
        rng (numpy.random.Generator): Resampling generator
        level (float): Confidence level
        resamples (int): Bootstrap resamples over paths

    Returns:
        tuple: (slope, (lo, hi))
    """
    curves = np.asarray(curves, dtype=float)
    estimate = slope(grid, curves.mean(axis=0))
    n = curves.shape[0]
    draws = np.empty(resamples)
    for k in range(resamples):
        picks = rng.integers(0, n, n)
        draws[k] = slope(grid, curves[picks].mean(axis=0))
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [tail, 1.0 - tail])
    return estimate, (float(min(lo, estimate)), float(max(hi, estimate)))
