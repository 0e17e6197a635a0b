"""Significance tests across groups of metric values, implemented from scratch.

One-way ANOVA, Kruskal-Wallis (tie-corrected), and Levene's test (median
center by default, i.e. the Brown-Forsythe form). P-values come from the
regularized incomplete beta/gamma functions below; a seeded permutation
mode is available so results can be audited without trusting the
special-function evaluation.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from statistics import fmean, median
from typing import Sequence

_EPS = 3e-14
_MAX_ITER = 500

TESTS = ("anova", "kruskal", "levene")


class DegenerateDataError(ValueError):
    """Input has no within-group variation the test could work with."""


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    df: tuple[float, ...]
    p_value: float
    groups: tuple[tuple[str, int], ...]


# -- special functions --------------------------------------------------------


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) via Lentz's continued fraction."""
    if a <= 0 or b <= 0:
        raise ValueError(f"a and b must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only below the symmetry point.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float) -> float:
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def reg_lower_gamma(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x)."""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return _gamma_series(s, x)
    return 1.0 - _gamma_cf(s, x)


def reg_upper_gamma(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x)."""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        return 1.0 - _gamma_series(s, x)
    return _gamma_cf(s, x)


def _gamma_series(s: float, x: float) -> float:
    term = 1.0 / s
    total = term
    n = s
    for _ in range(_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise ArithmeticError("incomplete gamma series did not converge")


def _gamma_cf(s: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - s)
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
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise ArithmeticError("incomplete gamma continued fraction did not converge")


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper tail of the F(df1, df2) distribution."""
    if f <= 0:
        return 1.0
    return reg_inc_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def chi2_sf(x: float, df: float) -> float:
    """Upper tail of the chi-square distribution with ``df`` degrees of freedom."""
    if x <= 0:
        return 1.0
    return reg_upper_gamma(df / 2.0, x / 2.0)


# -- test statistics -----------------------------------------------------------


def _check_groups(groups: Sequence[Sequence[float]], min_size: int) -> None:
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    for i, g in enumerate(groups):
        if len(g) < min_size:
            raise ValueError(
                f"group {i} has {len(g)} values, need at least {min_size}"
            )


def _labels(
    groups: Sequence[Sequence[float]], labels: Sequence[str] | None
) -> tuple[tuple[str, int], ...]:
    if labels is None:
        labels = [f"g{i + 1}" for i in range(len(groups))]
    if len(labels) != len(groups):
        raise ValueError("labels and groups differ in length")
    return tuple((lab, len(g)) for lab, g in zip(labels, groups))


def _anova_f(groups: Sequence[Sequence[float]]) -> tuple[float, float, float]:
    n_total = sum(len(g) for g in groups)
    k = len(groups)
    grand = fmean([x for g in groups for x in g])
    ss_between = sum(len(g) * (fmean(g) - grand) ** 2 for g in groups)
    ss_within = sum((x - fmean(g)) ** 2 for g in groups for x in g)
    df1 = k - 1
    df2 = n_total - k
    if df2 < 1:
        raise ValueError(f"need total N >= groups + 1, got N={n_total}, k={k}")
    if ss_within == 0.0:
        raise DegenerateDataError("zero within-group variance")
    return (ss_between / df1) / (ss_within / df2), df1, df2


def anova_oneway(
    groups: Sequence[Sequence[float]], labels: Sequence[str] | None = None
) -> TestResult:
    _check_groups(groups, min_size=2)
    f, df1, df2 = _anova_f(groups)
    return TestResult(
        name="anova",
        statistic=f,
        df=(df1, df2),
        p_value=f_sf(f, df1, df2),
        groups=_labels(groups, labels),
    )


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for idx in order[i : j + 1]:
            ranks[idx] = mid
        i = j + 1
    return ranks


def _kruskal_h(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    pooled = [x for g in groups for x in g]
    n = len(pooled)
    ranks = _midranks(pooled)
    h = 0.0
    offset = 0
    for g in groups:
        r = sum(ranks[offset : offset + len(g)])
        h += r * r / len(g)
        offset += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    tie_sum = 0
    for t in Counter(pooled).values():
        if t > 1:
            tie_sum += t**3 - t
    correction = 1.0 - tie_sum / (n**3 - n)
    if correction == 0.0:
        raise DegenerateDataError("all values identical")
    return h / correction, len(groups) - 1


def kruskal_wallis(
    groups: Sequence[Sequence[float]], labels: Sequence[str] | None = None
) -> TestResult:
    _check_groups(groups, min_size=1)
    if sum(len(g) for g in groups) < 3:
        raise ValueError("need total N >= 3")
    h, df = _kruskal_h(groups)
    return TestResult(
        name="kruskal",
        statistic=h,
        df=(df,),
        p_value=chi2_sf(h, df),
        groups=_labels(groups, labels),
    )


def _levene_transform(
    groups: Sequence[Sequence[float]], center: str
) -> list[list[float]]:
    if center == "median":
        centers = [median(g) for g in groups]
    elif center == "mean":
        centers = [fmean(g) for g in groups]
    else:
        raise ValueError(f"unknown center {center!r} (expected 'median' or 'mean')")
    return [[abs(x - c) for x in g] for g, c in zip(groups, centers)]


def levene(
    groups: Sequence[Sequence[float]],
    center: str = "median",
    labels: Sequence[str] | None = None,
) -> TestResult:
    _check_groups(groups, min_size=2)
    f, df1, df2 = _anova_f(_levene_transform(groups, center))
    return TestResult(
        name="levene",
        statistic=f,
        df=(df1, df2),
        p_value=f_sf(f, df1, df2),
        groups=_labels(groups, labels),
    )


# -- permutation mode ----------------------------------------------------------


def _statistic(groups: Sequence[Sequence[float]], test: str, center: str) -> float:
    if test == "anova":
        return _anova_f(groups)[0]
    if test == "kruskal":
        return _kruskal_h(groups)[0]
    if test == "levene":
        return _anova_f(_levene_transform(groups, center))[0]
    raise ValueError(f"unknown test {test!r}, expected one of {TESTS}")


def permutation_test(
    groups: Sequence[Sequence[float]],
    test: str,
    resamples: int = 10000,
    seed: int = 0,
    center: str = "median",
    labels: Sequence[str] | None = None,
) -> TestResult:
    """Label-permutation p-value for any of the three tests.

    Values are pooled and reassigned to the original group sizes; the
    p-value is (1 + #{resample stat >= observed}) / (1 + resamples).
    A resample that lands degenerate counts as at least as extreme.
    """
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    observed = _statistic(groups, test, center)
    sizes = [len(g) for g in groups]
    pooled = [x for g in groups for x in g]
    rng = random.Random(seed)
    extreme = 0
    for _ in range(resamples):
        rng.shuffle(pooled)
        resampled = []
        offset = 0
        for size in sizes:
            resampled.append(pooled[offset : offset + size])
            offset += size
        try:
            stat = _statistic(resampled, test, center)
        except DegenerateDataError:
            stat = math.inf
        if stat >= observed - 1e-12:
            extreme += 1
    return TestResult(
        name=f"{test}_perm",
        statistic=observed,
        df=(float(resamples),),
        p_value=(1 + extreme) / (1 + resamples),
        groups=_labels(groups, labels),
    )
