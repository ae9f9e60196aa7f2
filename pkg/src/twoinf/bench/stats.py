"""Interval estimates for Monte Carlo frequencies."""

from __future__ import annotations

import math
from typing import Sequence, Tuple

from scipy.stats import norm


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    z = norm.ppf(0.5 + level / 2.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def paired_sign_interval(diffs: Sequence[float], level: float = 0.95):
    """Wilson interval for the share of nonzero paired differences that are positive.

    Returns ``(positives, negatives, (lo, hi))``.  A lower end above 1/2
    means positive differences dominate beyond Monte Carlo noise.
    """
    pos = sum(1 for d in diffs if d > 0)
    neg = sum(1 for d in diffs if d < 0)
    return pos, neg, wilson_interval(pos, pos + neg, level)


def mean_difference_interval(diffs: Sequence[float], level: float = 0.95) -> Tuple[float, float, float]:
    """Mean of paired differences with a normal-theory interval."""
    k = len(diffs)
    if k == 0:
        return (math.nan, math.nan, math.nan)
    mean = math.fsum(diffs) / k
    if k == 1:
        return (mean, -math.inf, math.inf)
    var = math.fsum((d - mean) ** 2 for d in diffs) / (k - 1)
    half = norm.ppf(0.5 + level / 2.0) * math.sqrt(var / k)
    return (mean, mean - half, mean + half)


def intervals_disjoint(a: Tuple[float, float], b: Tuple[float, float]) -> bool:
    return a[1] < b[0] or b[1] < a[0]
