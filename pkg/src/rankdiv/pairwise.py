"""Set-based and rank-sensitive similarity between two ranked lists.

All functions operate on plain item sequences; use ``RankedList.item_ids()``
to feed validated lists. Prefixes past a list's end use the whole list (no
phantom padding), so truncated lists never manufacture disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .core import BenchmarkRun

METRICS = ("ao", "jaccard", "rbo", "tau")


def ao_profile(a: Sequence[str], b: Sequence[str], k: int) -> list[float]:
    """Per-depth prefix overlap: entry d is |A_1:d ∩ B_1:d| / d for d = 1..k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    seen_a: set[str] = set()
    seen_b: set[str] = set()
    overlap = 0
    profile: list[float] = []
    for d in range(1, k + 1):
        if d <= len(a):
            x = a[d - 1]
            if x in seen_b:
                overlap += 1
            seen_a.add(x)
        if d <= len(b):
            y = b[d - 1]
            if y in seen_a:
                overlap += 1
            seen_b.add(y)
        profile.append(overlap / d)
    return profile


def average_overlap(a: Sequence[str], b: Sequence[str], k: int) -> float:
    """Mean of the prefix-overlap profile over depths 1..k. Symmetric."""
    profile = ao_profile(a, b, k)
    return sum(profile) / k


def jaccard(a: Sequence[str], b: Sequence[str], k: int) -> float:
    """Intersection over union of the two top-k item sets.

    Both sets empty returns 1.0 by convention; validated lists are never
    empty, so this arises only on raw sequences.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sa = set(a[:k])
    sb = set(b[:k])
    union = sa | sb
    if not union:
        return 1.0
    return len(sa & sb) / len(union)


def rbo_truncated(a: Sequence[str], b: Sequence[str], p: float, k: int) -> float:
    """Finite-depth rank-biased overlap: (1-p) * sum_d p^(d-1) * overlap_d / d.

    The maximum attainable value at depth k is 1 - p^k, not 1; identical
    lists only reach 1 in the extrapolated variant.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    profile = ao_profile(a, b, k)
    weight = 1.0
    total = 0.0
    for entry in profile:
        total += weight * entry
        weight *= p
    return (1.0 - p) * total


def rbo_extrapolated(a: Sequence[str], b: Sequence[str], p: float, k: int) -> float:
    """Truncated RBO plus the tail term assuming depth-k agreement persists.

    Equals 1.0 for identical lists at any depth.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    profile = ao_profile(a, b, k)
    return rbo_truncated(a, b, p, k) + p**k * profile[-1]


def shared_items(a: Sequence[str], b: Sequence[str]) -> set[str]:
    return set(a) & set(b)


def kendall_tau(a: Sequence[str], b: Sequence[str]) -> float | None:
    """No-ties Kendall correlation over the shared-item subset.

    Both lists are restricted to their common items and compared by relative
    order. Returns None when fewer than 2 items are shared (undefined).
    """
    shared = shared_items(a, b)
    s = len(shared)
    if s < 2:
        return None
    pos_a = {item: i for i, item in enumerate(a) if item in shared}
    pos_b = {item: i for i, item in enumerate(b) if item in shared}
    concordant = 0
    discordant = 0
    for x, y in combinations(sorted(shared), 2):
        if (pos_a[x] - pos_a[y]) * (pos_b[x] - pos_b[y]) > 0:
            concordant += 1
        else:
            discordant += 1
    return (concordant - discordant) / (0.5 * s * (s - 1))


@dataclass(frozen=True)
class PairwiseScores:
    """All four metrics for one (model pair, task) cell.

    ``tau`` is None when the pair shares fewer than 2 items on this task;
    ``tau_support`` records the shared-item count tau was computed over.
    """

    model_a: str
    model_b: str
    task: str
    ao: float
    jaccard: float
    rbo: float
    tau: float | None
    tau_support: int

    def value(self, metric: str) -> float | None:
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        return getattr(self, metric)


def pair_scores(
    run: BenchmarkRun,
    k: int = 10,
    rbo_p: float = 0.9,
    rbo_variant: str = "trunc",
) -> list[PairwiseScores]:
    """Score every unordered model pair on every task where both have lists.

    Pairs are ordered (model_a < model_b) and rows sorted by (model_a,
    model_b, task), so the output order is deterministic.
    """
    rbo_fn = _rbo_fn(rbo_variant)
    out: list[PairwiseScores] = []
    for model_a, model_b in combinations(run.models, 2):
        for task in run.tasks:
            la = run.get(model_a, task)
            lb = run.get(model_b, task)
            if la is None or lb is None:
                continue
            a = la.item_ids()
            b = lb.item_ids()
            out.append(
                PairwiseScores(
                    model_a=model_a,
                    model_b=model_b,
                    task=task,
                    ao=average_overlap(a, b, k),
                    jaccard=jaccard(a, b, k),
                    rbo=rbo_fn(a, b, rbo_p, k),
                    tau=kendall_tau(a, b),
                    tau_support=len(shared_items(a, b)),
                )
            )
    return out


@dataclass(frozen=True)
class PairwiseMatrix:
    """Symmetric pair x pair aggregate of one metric over tasks."""

    metric: str
    models: tuple[str, ...]
    cells: dict[tuple[str, str], float | None]
    undefined_counts: dict[tuple[str, str], int]
    diagonal: float

    def cell(self, model_a: str, model_b: str) -> float | None:
        if model_a == model_b:
            return self.diagonal
        return self.cells[_pair_key(model_a, model_b)]

    def rows(self) -> list[dict[str, object]]:
        """Square-matrix rows, models in run order, for CSV/JSON emission."""
        out: list[dict[str, object]] = []
        for model in self.models:
            row: dict[str, object] = {"model": model}
            for other in self.models:
                row[other] = self.cell(model, other)
            out.append(row)
        return out


def _pair_key(model_a: str, model_b: str) -> tuple[str, str]:
    return (model_a, model_b) if model_a <= model_b else (model_b, model_a)


def _rbo_fn(variant: str):
    if variant == "trunc":
        return rbo_truncated
    if variant == "extra":
        return rbo_extrapolated
    raise ValueError(f"unknown RBO variant {variant!r} (expected 'trunc' or 'extra')")


def self_value(metric: str, rbo_p: float = 0.9, k: int = 10, rbo_variant: str = "trunc") -> float:
    """Metric value of a full-length list against itself (matrix diagonal)."""
    if metric in ("ao", "jaccard", "tau"):
        return 1.0
    if metric == "rbo":
        return 1.0 - rbo_p**k if rbo_variant == "trunc" else 1.0
    raise ValueError(f"unknown metric {metric!r}")


def matrix_from_scores(
    scores: list[PairwiseScores],
    models: tuple[str, ...],
    metric: str,
    rbo_p: float = 0.9,
    k: int = 10,
    rbo_variant: str = "trunc",
) -> PairwiseMatrix:
    """Aggregate per-task scores into unweighted per-pair means.

    Undefined tau cells are excluded from the mean; the per-pair count of
    excluded tasks is reported in ``undefined_counts``.
    """
    cells: dict[tuple[str, str], float | None] = {}
    undefined: dict[tuple[str, str], int] = {}
    for model_a, model_b in combinations(models, 2):
        key = _pair_key(model_a, model_b)
        values = [
            s.value(metric)
            for s in scores
            if _pair_key(s.model_a, s.model_b) == key
        ]
        defined = [v for v in values if v is not None]
        undefined[key] = len(values) - len(defined)
        cells[key] = sum(defined) / len(defined) if defined else None
    return PairwiseMatrix(
        metric=metric,
        models=models,
        cells=cells,
        undefined_counts=undefined,
        diagonal=self_value(metric, rbo_p=rbo_p, k=k, rbo_variant=rbo_variant),
    )


def pairwise_matrix(
    run: BenchmarkRun,
    metric: str,
    k: int = 10,
    rbo_p: float = 0.9,
    rbo_variant: str = "trunc",
) -> PairwiseMatrix:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")
    if len(run.models) < 2:
        raise ValueError("pairwise matrix needs at least 2 models")
    scores = pair_scores(run, k=k, rbo_p=rbo_p, rbo_variant=rbo_variant)
    return matrix_from_scores(
        scores, run.models, metric, rbo_p=rbo_p, k=k, rbo_variant=rbo_variant
    )
