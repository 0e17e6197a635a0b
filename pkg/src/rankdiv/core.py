"""Shared domain types: canonical item ids, ranked lists, benchmark runs."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

_WS_RUN = re.compile(r"\s+")


class InvalidItemError(ValueError):
    """Item identifier is empty or whitespace-only."""


def canonicalize_item(raw: str) -> str:
    """Normalize a raw item name to its canonical form.

    Trims, collapses internal whitespace runs to single spaces, and folds
    case to lowercase. Punctuation is preserved deliberately: stripping it
    could merge genuinely distinct identifiers. Idempotent.
    """
    collapsed = _WS_RUN.sub(" ", raw.strip())
    if not collapsed:
        raise InvalidItemError("item name is empty or whitespace-only")
    return collapsed.casefold()


@dataclass(frozen=True)
class RankedList:
    """One agent's ordered, duplicate-free item list for one task.

    Position in ``items`` (1-based) is the rank. ``k`` is the intended list
    depth; the actual list may be shorter when an agent returned fewer items.
    Relevance, when present, is a fraction in [0, 1].
    """

    model: str
    task: str
    items: tuple[tuple[str, float | None], ...]
    k: int

    def __post_init__(self) -> None:
        if not self.model or not self.task:
            raise ValueError("model and task labels must be non-empty")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 1 <= len(self.items) <= self.k:
            raise ValueError(
                f"list length {len(self.items)} outside [1, k={self.k}] "
                f"for ({self.model}, {self.task})"
            )
        seen: set[str] = set()
        for item, relevance in self.items:
            if item != canonicalize_item(item):
                raise ValueError(f"item {item!r} is not in canonical form")
            if item in seen:
                raise ValueError(
                    f"duplicate item {item!r} in ({self.model}, {self.task})"
                )
            seen.add(item)
            if relevance is not None and not 0.0 <= relevance <= 1.0:
                raise ValueError(f"relevance {relevance} outside [0, 1]")

    def item_ids(self) -> tuple[str, ...]:
        return tuple(item for item, _ in self.items)

    def rank_of(self, item: str) -> int | None:
        """1-based rank of ``item``, or None when absent."""
        for position, (candidate, _) in enumerate(self.items, start=1):
            if candidate == item:
                return position
        return None

    def relevance_of(self, item: str) -> float | None:
        for candidate, relevance in self.items:
            if candidate == item:
                return relevance
        return None


def rank_of(ranked: RankedList, item: str) -> int | None:
    return ranked.rank_of(item)


@dataclass(frozen=True)
class BenchmarkRun:
    """The full collection of ranked lists keyed by (model, task).

    ``models`` and ``tasks`` are exactly the label sets appearing in
    ``lists``, held in sorted order so that every downstream artifact is
    deterministic regardless of input file order.
    """

    lists: tuple[RankedList, ...]
    models: tuple[str, ...]
    tasks: tuple[str, ...]
    _index: dict[tuple[str, str], RankedList] = field(
        repr=False, compare=False, default_factory=dict
    )

    @classmethod
    def from_lists(cls, lists: list[RankedList] | tuple[RankedList, ...]) -> "BenchmarkRun":
        if not lists:
            raise ValueError("a benchmark run needs at least one ranked list")
        ordered = tuple(sorted(lists, key=lambda l: (l.model, l.task)))
        index: dict[tuple[str, str], RankedList] = {}
        for ranked in ordered:
            key = (ranked.model, ranked.task)
            if key in index:
                raise ValueError(f"more than one list for (model, task) = {key}")
            index[key] = ranked
        models = tuple(sorted({l.model for l in ordered}))
        tasks = tuple(sorted({l.task for l in ordered}))
        return cls(lists=ordered, models=models, tasks=tasks, _index=index)

    def __post_init__(self) -> None:
        if not self._index:
            object.__setattr__(
                self, "_index", {(l.model, l.task): l for l in self.lists}
            )

    def get(self, model: str, task: str) -> RankedList | None:
        return self._index.get((model, task))

    def lists_for_task(self, task: str) -> tuple[RankedList, ...]:
        return tuple(l for l in self.lists if l.task == task)

    def max_k(self) -> int:
        return max(l.k for l in self.lists)


# Definitional ranges used to flag (never clamp) out-of-range metric values.
METRIC_RANGES: dict[str, tuple[float, float]] = {
    "ao": (0.0, 1.0),
    "jaccard": (0.0, 1.0),
    "rbo": (0.0, 1.0),
    "tau": (-1.0, 1.0),
    "w": (0.0, 1.0),
    "alpha": (-math.inf, 1.0),
    "volatility": (0.0, math.inf),
    "arv": (0.0, math.inf),
    "d_k_tau": (0.0, 2.0),
    "d_k_literal": (0.0, 1.0),
}


@dataclass(frozen=True)
class MetricValue:
    """A named metric value with its definitional range and provenance.

    Values outside the range are flagged, not clamped: an out-of-range value
    is a signal (e.g. W computed over ragged lists), never silently repaired.
    """

    name: str
    value: float
    lo: float
    hi: float
    provenance: str

    @classmethod
    def checked(cls, name: str, value: float, provenance: str) -> "MetricValue":
        lo, hi = METRIC_RANGES[name]
        return cls(name=name, value=value, lo=lo, hi=hi, provenance=provenance)

    @property
    def in_range(self) -> bool:
        return self.lo <= self.value <= self.hi
