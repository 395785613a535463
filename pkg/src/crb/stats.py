"""Rank-based nonparametric tests: average ranks, K-group and two-group
rank tests, step-down multiple-comparison adjustment, and rank correlation.

Defaults: continuity correction ON for the two-group test, chi-square
approximation for the K-group p-value (group sizes in this project are
large enough); both are exposed as flags. Rank-correlation p-values are
not emitted.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

@dataclass(frozen=True)
class StatResult:
    test: str  # kruskal_wallis | mann_whitney_u | spearman
    statistic: float
    df: int | None = None
    p_value: float | None = None
    p_adjusted: float | None = None
    tie_corrected: bool = False
    degenerate: bool = False


def average_ranks(values: list[float]) -> list[float]:
    """Ranks 1..n; tied values share the mean of their rank span."""
    if not values:
        raise ValueError("values must be non-empty")
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


# ---------------------------------------------------------------------------
# chi-square survival function via the regularized upper incomplete gamma


def _gamma_series(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x) by series expansion."""
    term = 1.0 / a
    total = term
    n = a
    for _ in range(500):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) by continued fraction
    (modified Lentz)."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail chi-square probability, abs err < 1e-10 for df <= 50."""
    if x < 0:
        raise ValueError("x must be >= 0")
    if df < 1:
        raise ValueError("df must be >= 1")
    if x == 0:
        return 1.0
    a, half_x = df / 2.0, x / 2.0
    if half_x < a + 1.0:
        return 1.0 - _gamma_series(a, half_x)
    return _gamma_cf(a, half_x)


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _tie_sum(pooled: list[float]) -> float:
    return sum(t**3 - t for t in Counter(pooled).values())


# ---------------------------------------------------------------------------
# tests


def kruskal_wallis(groups: list[list[float]], exact: bool = False, seed: int = 0) -> StatResult:
    """K-group rank test with tie correction; chi-square p with df = k-1.

    `exact=True` switches to a brute-force permutation p-value (only
    feasible for pooled n <= 10).
    """
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise ValueError("need >= 2 non-empty groups")
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    if n < 3:
        raise ValueError("need total n >= 3")
    tie_term = _tie_sum(pooled)
    correction = 1.0 - tie_term / (n**3 - n)
    if correction == 0.0:
        return StatResult("kruskal_wallis", 0.0, df=len(groups) - 1, p_value=1.0,
                          tie_corrected=True, degenerate=True)
    h = _kw_statistic(groups, pooled) / correction
    df = len(groups) - 1
    if exact:
        if n > 10:
            raise ValueError("exact permutation p only supported for n <= 10")
        p = _kw_permutation_p(groups, h * correction, correction)
    else:
        p = chi_square_sf(h, df)
    return StatResult("kruskal_wallis", h, df=df, p_value=p, tie_corrected=tie_term > 0)


def _kw_statistic(groups: list[list[float]], pooled: list[float]) -> float:
    n = len(pooled)
    ranks = average_ranks(pooled)
    h = 0.0
    i = 0
    for g in groups:
        r_sum = sum(ranks[i : i + len(g)])
        h += r_sum**2 / len(g)
        i += len(g)
    return 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)


def _kw_permutation_p(groups: list[list[float]], h_obs: float, correction: float) -> float:
    """Enumerate all reassignments of pooled values to group slots."""
    pooled = [v for g in groups for v in g]
    sizes = [len(g) for g in groups]
    count = 0
    total = 0
    for perm in itertools.permutations(range(len(pooled))):
        vals = [pooled[i] for i in perm]
        regrouped = []
        i = 0
        for s in sizes:
            regrouped.append(vals[i : i + s])
            i += s
        total += 1
        if _kw_statistic(regrouped, vals) >= h_obs - 1e-12:
            count += 1
    return count / total


def mann_whitney_u(
    a: list[float],
    b: list[float],
    two_sided: bool = True,
    continuity: bool = True,
) -> StatResult:
    """Two-group rank test, normal approximation with tie-corrected variance.

    U is the smaller of the two rank-sum statistics; with the continuity
    correction the z numerator moves 0.5 toward zero.
    """
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    pooled = list(a) + list(b)
    n = n1 + n2
    ranks = average_ranks(pooled)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u2 = n1 * n2 - u1
    u = min(u1, u2)
    tie_term = _tie_sum(pooled)
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return StatResult("mann_whitney_u", u, p_value=1.0, tie_corrected=True, degenerate=True)
    num = u - n1 * n2 / 2.0
    if continuity:
        num += 0.5 if num < 0 else -0.5 if num > 0 else 0.0
    z = num / math.sqrt(var)
    p = _normal_cdf(z)
    if two_sided:
        p = min(1.0, 2.0 * p)
    return StatResult("mann_whitney_u", u, p_value=p, tie_corrected=tie_term > 0)


def holm_adjust(p_values: list[float]) -> list[float]:
    """Step-down adjustment; output is returned in the input order."""
    if any(not 0.0 <= p <= 1.0 for p in p_values):
        raise ValueError("p-values must lie in [0, 1]")
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running_max = 0.0
    for rank, idx in enumerate(order):
        stepped = min(1.0, (m - rank) * p_values[idx])
        running_max = max(running_max, stepped)
        adjusted[idx] = running_max
    return adjusted


def spearman(x: list[float], y: list[float]) -> StatResult:
    """Pearson correlation of average ranks (tie-safe). A constant input
    makes the coefficient undefined; the result is flagged degenerate."""
    if len(x) != len(y) or len(x) < 3:
        raise ValueError("need |x| = |y| >= 3")
    rx = average_ranks(list(x))
    ry = average_ranks(list(y))
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    sxx = sum((v - mx) ** 2 for v in rx)
    syy = sum((v - my) ** 2 for v in ry)
    if sxx == 0 or syy == 0:
        return StatResult("spearman", math.nan, degenerate=True)
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    rho = sxy / math.sqrt(sxx * syy)
    return StatResult("spearman", max(-1.0, min(1.0, rho)), tie_corrected=True)
