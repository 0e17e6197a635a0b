"""Per-task uncertainty and consensus: item volatility, ARV, Kemeny distances.

Two consensus-distance forms are emitted side by side. The tau form
(1 - mean pairwise Kendall correlation, range [0, 2]) is the reported
default; the literal average-rank form stays available for audit because
the two disagree on what "perfect agreement" looks like.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from statistics import fmean, pvariance
from typing import Sequence

from .core import RankedList
from .group import rank_table
from .pairwise import kendall_tau

EXACT_KEMENY_MAX_ITEMS = 8


@dataclass(frozen=True)
class VolatilityEntry:
    item: str
    ranks_observed: tuple[tuple[str, int], ...]
    variance: float
    support: int


@dataclass(frozen=True)
class ConsensusReport:
    task: str
    entries: tuple[VolatilityEntry, ...]
    arv: float | None
    arv_items: int
    tau_bar: float | None
    tau_pairs_used: int
    tau_pairs_undefined: int
    d_k_tau: float | None
    d_k_literal: float
    consensus_order: tuple[str, ...]


def _observed_ranks(
    item: str,
    lists: Sequence[RankedList],
    impute_missing: bool = False,
    k: int | None = None,
) -> tuple[tuple[str, int], ...]:
    if impute_missing and k is None:
        k = max(l.k for l in lists)
    observed: list[tuple[str, int]] = []
    for ranked in lists:
        rank = ranked.rank_of(item)
        if rank is not None:
            observed.append((ranked.model, rank))
        elif impute_missing:
            observed.append((ranked.model, k + 1))
    return tuple(observed)


def volatility(
    item: str,
    lists: Sequence[RankedList],
    impute_missing: bool = False,
    k: int | None = None,
) -> VolatilityEntry:
    """Population variance of the ranks the models assigned to ``item``."""
    observed = _observed_ranks(item, lists, impute_missing=impute_missing, k=k)
    if not any(ranked.rank_of(item) is not None for ranked in lists):
        raise ValueError(f"item {item!r} appears in no list")
    ranks = [rank for _, rank in observed]
    return VolatilityEntry(
        item=item,
        ranks_observed=observed,
        variance=pvariance(ranks) if len(ranks) > 1 else 0.0,
        support=len(ranks),
    )


def volatility_table(
    lists: Sequence[RankedList],
    impute_missing: bool = False,
    k: int | None = None,
) -> list[VolatilityEntry]:
    items = sorted(set().union(*[set(l.item_ids()) for l in lists]))
    return [
        volatility(item, lists, impute_missing=impute_missing, k=k)
        for item in items
    ]


def arv(
    lists: Sequence[RankedList],
    min_support: int = 2,
    impute_missing: bool = False,
    k: int | None = None,
) -> tuple[float | None, int]:
    """Mean volatility over unique items with support >= min_support.

    Returns (mean variance, item count); (None, 0) when no item qualifies.
    Items seen by a single model are excluded by default: one observation
    has no dispersion, and imputing ranks would conflate absence with
    disagreement (opt in via ``impute_missing``).
    """
    if len(lists) < 2:
        raise ValueError("ARV needs at least 2 lists")
    entries = volatility_table(lists, impute_missing=impute_missing, k=k)
    qualifying = [e for e in entries if e.support >= min_support]
    if not qualifying:
        return None, 0
    return fmean(e.variance for e in qualifying), len(qualifying)


def mean_pairwise_tau(
    lists: Sequence[RankedList],
) -> tuple[float | None, int, int]:
    """Mean Kendall tau over model pairs: (tau_bar, pairs used, pairs undefined)."""
    if len(lists) < 2:
        raise ValueError("need at least 2 lists")
    taus: list[float] = []
    undefined = 0
    for la, lb in combinations(lists, 2):
        tau = kendall_tau(la.item_ids(), lb.item_ids())
        if tau is None:
            undefined += 1
        else:
            taus.append(tau)
    if not taus:
        return None, 0, undefined
    return fmean(taus), len(taus), undefined


def kemeny_distance_tau(lists: Sequence[RankedList]) -> float | None:
    """Consensus distance as 1 - mean pairwise tau; range [0, 2], unclamped.

    None when every pair shares fewer than 2 items (tau undefined).
    """
    tau_bar, used, _ = mean_pairwise_tau(lists)
    if tau_bar is None:
        return None
    return 1.0 - tau_bar


def average_ranks(lists: Sequence[RankedList]) -> dict[str, float]:
    """Mean rank per item over the models that ranked it."""
    sums: dict[str, int] = {}
    counts: dict[str, int] = {}
    for ranked in lists:
        for position, (item, _) in enumerate(ranked.items, start=1):
            sums[item] = sums.get(item, 0) + position
            counts[item] = counts.get(item, 0) + 1
    return {item: sums[item] / counts[item] for item in sums}


def kemeny_distance_literal(lists: Sequence[RankedList]) -> float:
    """Average-rank dispersion form, evaluated exactly as defined.

    D = 1 - mean over item pairs of (1 - |r_i - r_j| / (n - 1)), with r the
    per-item average ranks and n the universe size. Note the inverted sense:
    identical average ranks yield 0 and maximally spread ranks approach
    ~0.41 for concordant 1..n rankings; kept verbatim for audit.
    """
    means = average_ranks(lists)
    n = len(means)
    if n < 2:
        raise ValueError(f"item universe has {n} items, need >= 2")
    items = sorted(means)
    total = 0.0
    pairs = 0
    for x, y in combinations(items, 2):
        total += abs(means[x] - means[y]) / (n - 1)
        pairs += 1
    return total / pairs


def consensus_order_borda(
    lists: Sequence[RankedList], policy: str = "kplus1", k: int | None = None
) -> tuple[str, ...]:
    """Items sorted ascending by mean completed rank; ties broken by item id."""
    table = rank_table(lists, policy=policy, k=k)
    m = len(table.models)
    mean_rank = {
        item: sum(row[i] for row in table.ranks) / m
        for i, item in enumerate(table.items)
    }
    return tuple(sorted(table.items, key=lambda item: (mean_rank[item], item)))


def _conjoint_universe(lists: Sequence[RankedList]) -> tuple[str, ...]:
    first = set(lists[0].item_ids())
    for ranked in lists[1:]:
        if set(ranked.item_ids()) != first:
            raise ValueError("lists are not conjoint (item universes differ)")
    return tuple(sorted(first))


def kemeny_objective(order: Sequence[str], lists: Sequence[RankedList]) -> float:
    """Normalized pairwise disagreement of a candidate order with all lists.

    Conjoint lists only. Counts, over models and item pairs, how often the
    order inverts the model's relative order; normalized by m * n(n-1)/2.
    """
    items = _conjoint_universe(lists)
    if set(order) != set(items):
        raise ValueError("order must cover exactly the conjoint universe")
    n = len(items)
    m = len(lists)
    position = {item: i for i, item in enumerate(order)}
    disagreements = 0
    for ranked in lists:
        own = {item: i for i, item in enumerate(ranked.item_ids())}
        for x, y in combinations(items, 2):
            if (position[x] - position[y]) * (own[x] - own[y]) < 0:
                disagreements += 1
    return disagreements / (m * 0.5 * n * (n - 1))


def kemeny_exact(
    lists: Sequence[RankedList], max_items: int = EXACT_KEMENY_MAX_ITEMS
) -> tuple[tuple[str, ...], float]:
    """Exhaustive optimum of the pairwise-disagreement objective.

    Oracle-grade only: refuses universes larger than ``max_items`` (factorial
    search). Ties between optimal orders break to the lexicographically
    first permutation, so the result is deterministic.
    """
    items = _conjoint_universe(lists)
    n = len(items)
    if n > max_items:
        raise ValueError(
            f"exact solver capped at {max_items} items, got {n}"
        )
    if len(lists) < 2:
        raise ValueError("need at least 2 lists")
    index = {item: i for i, item in enumerate(items)}
    m = len(lists)
    # cost[i][j]: models ranking item j before item i (cost of placing i first).
    cost = [[0] * n for _ in range(n)]
    for ranked in lists:
        own = {item: i for i, item in enumerate(ranked.item_ids())}
        for x, y in combinations(items, 2):
            if own[x] < own[y]:
                cost[index[y]][index[x]] += 1
            else:
                cost[index[x]][index[y]] += 1
    best_order: tuple[str, ...] | None = None
    best_total = None
    for perm in permutations(range(n)):
        total = 0
        for i in range(n):
            row = cost[perm[i]]
            for j in range(i + 1, n):
                total += row[perm[j]]
            if best_total is not None and total > best_total:
                break
        if best_total is None or total < best_total:
            best_total = total
            best_order = tuple(items[i] for i in perm)
    return best_order, best_total / (m * 0.5 * n * (n - 1))


def consensus_report(
    task: str,
    lists: Sequence[RankedList],
    min_support: int = 2,
    impute_missing: bool = False,
    policy: str = "kplus1",
    k: int | None = None,
) -> ConsensusReport:
    entries = volatility_table(lists, impute_missing=impute_missing, k=k)
    arv_value, arv_items = arv(
        lists, min_support=min_support, impute_missing=impute_missing, k=k
    )
    tau_bar, used, undefined = mean_pairwise_tau(lists)
    return ConsensusReport(
        task=task,
        entries=tuple(entries),
        arv=arv_value,
        arv_items=arv_items,
        tau_bar=tau_bar,
        tau_pairs_used=used,
        tau_pairs_undefined=undefined,
        d_k_tau=None if tau_bar is None else 1.0 - tau_bar,
        d_k_literal=kemeny_distance_literal(lists),
        consensus_order=consensus_order_borda(lists, policy=policy, k=k),
    )
