"""Group-level reliability across all models for one task: Kendall W, Cronbach alpha."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from statistics import fmean, pvariance
from typing import Sequence

from .core import RankedList

POLICIES = ("kplus1", "intersection")


@dataclass(frozen=True)
class RankTable:
    """m x n table of ranks: one row per model, one column per universe item."""

    models: tuple[str, ...]
    items: tuple[str, ...]
    ranks: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class GroupReliability:
    task: str
    w: float
    alpha: float | None
    m: int
    n_items: int
    score_source: str


def _universe(lists: Sequence[RankedList], policy: str) -> tuple[str, ...]:
    sets = [set(l.item_ids()) for l in lists]
    if policy == "kplus1":
        merged: set[str] = set().union(*sets)
    elif policy == "intersection":
        merged = set.intersection(*sets)
    else:
        raise ValueError(f"unknown missing-item policy {policy!r}")
    return tuple(sorted(merged))


def rank_table(
    lists: Sequence[RankedList], policy: str = "kplus1", k: int | None = None
) -> RankTable:
    """Complete each model's ranking over the shared item universe.

    Under ``kplus1`` the universe is the union of all items and missing
    items receive the tied rank k+1. Under ``intersection`` the universe is
    restricted to items every model ranked, and ranks are re-assigned
    densely within it so each row is a strict permutation.
    """
    if len(lists) < 2:
        raise ValueError("rank table needs at least 2 lists")
    if k is None:
        k = max(l.k for l in lists)
    items = _universe(lists, policy)
    if len(items) < 2:
        raise ValueError(f"item universe has {len(items)} items, need >= 2")
    rows: list[tuple[int, ...]] = []
    for ranked in lists:
        if policy == "kplus1":
            rows.append(
                tuple(ranked.rank_of(item) or (k + 1) for item in items)
            )
        else:
            by_own_order = sorted(items, key=lambda it: ranked.rank_of(it))
            dense = {item: d for d, item in enumerate(by_own_order, start=1)}
            rows.append(tuple(dense[item] for item in items))
    return RankTable(
        models=tuple(l.model for l in lists), items=items, ranks=tuple(rows)
    )


def kendall_w(
    lists: Sequence[RankedList], policy: str = "kplus1", k: int | None = None
) -> float:
    """Coefficient of concordance over the completed rank table.

    Uses the tie-corrected denominator m^2(n^3 - n) - m * sum(t^3 - t),
    needed because the k+1 policy assigns tied ranks to missing items.
    Ragged inputs (lists shorter than k) can push the value above 1; it is
    reported as computed and flagged downstream, never clamped.
    """
    table = rank_table(lists, policy=policy, k=k)
    m = len(table.models)
    n = len(table.items)
    column_sums = [sum(row[i] for row in table.ranks) for i in range(n)]
    mean_sum = fmean(column_sums)
    s = sum((c - mean_sum) ** 2 for c in column_sums)
    tie_sum = 0
    for row in table.ranks:
        for t in Counter(row).values():
            if t > 1:
                tie_sum += t**3 - t
    denominator = m * m * (n**3 - n) - m * tie_sum
    if denominator <= 0:
        raise ValueError("degenerate rank table: all ranks tied")
    return 12.0 * s / denominator


def score_vector(
    ranked: RankedList, universe: Sequence[str], k: int
) -> list[float]:
    """Per-item scores for one model, aligned to ``universe`` order.

    Relevance is used when present; ranked items without relevance fall back
    to the rank-derived score (k+1-rank)/k; unranked items score 0.
    """
    out: list[float] = []
    for item in universe:
        relevance = ranked.relevance_of(item)
        if relevance is not None:
            out.append(relevance)
            continue
        rank = ranked.rank_of(item)
        out.append((k + 1 - rank) / k if rank is not None else 0.0)
    return out


def cronbach_alpha(
    lists: Sequence[RankedList], policy: str = "kplus1", k: int | None = None
) -> tuple[float | None, str]:
    """Internal-consistency coefficient treating models as raters.

    Population variance throughout. Returns (alpha, score_source) where
    alpha is None when the per-item totals are constant (undefined) and
    score_source records whether any relevance scores fed the computation.
    Negative alpha is reported as-is: it signals anti-coherence.
    """
    if len(lists) < 2:
        raise ValueError("cronbach alpha needs at least 2 lists")
    if k is None:
        k = max(l.k for l in lists)
    universe = _universe(lists, policy)
    if len(universe) < 2:
        raise ValueError(f"item universe has {len(universe)} items, need >= 2")
    vectors = [score_vector(l, universe, k) for l in lists]
    used_relevance = any(
        l.relevance_of(item) is not None for l in lists for item in universe
    )
    source = "relevance" if used_relevance else "rank_derived"
    m = len(lists)
    rater_variances = [pvariance(v) for v in vectors]
    totals = [sum(v[i] for v in vectors) for i in range(len(universe))]
    total_variance = pvariance(totals)
    if total_variance == 0.0:
        return None, source
    alpha = (m / (m - 1)) * (1.0 - sum(rater_variances) / total_variance)
    return alpha, source


def group_reliability(
    task: str,
    lists: Sequence[RankedList],
    policy: str = "kplus1",
    k: int | None = None,
) -> GroupReliability:
    alpha, source = cronbach_alpha(lists, policy=policy, k=k)
    universe = _universe(lists, policy)
    return GroupReliability(
        task=task,
        w=kendall_w(lists, policy=policy, k=k),
        alpha=alpha,
        m=len(lists),
        n_items=len(universe),
        score_source=source,
    )
