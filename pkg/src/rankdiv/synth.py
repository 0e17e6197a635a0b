"""Synthetic multi-agent runs with controllable overlap and rank noise.

Stands in for live agents: each task draws a reference ranking, then each
model receives a perturbed copy. Swap noise applies Poisson-many adjacent
transpositions (a smooth dial from identity to shuffled); substitution
noise swaps items for unseen universe items, diluting set overlap.
Everything is driven by per-(task, model) seeds derived from the config
seed, so generation is deterministic and order-independent.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .core import BenchmarkRun, RankedList
from .ingest import run_to_blocks


@dataclass(frozen=True)
class SynthConfig:
    models: int
    tasks: int
    k: int = 10
    universe_size: int = 30
    swap_noise: float = 0.0
    substitution_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.models < 2:
            raise ValueError("need at least 2 models")
        if self.tasks < 1:
            raise ValueError("need at least 1 task")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.universe_size < self.k:
            raise ValueError(
                f"universe_size {self.universe_size} smaller than k {self.k}"
            )
        if self.swap_noise < 0:
            raise ValueError("swap_noise must be >= 0")
        if not 0.0 <= self.substitution_rate <= 1.0:
            raise ValueError("substitution_rate must be in [0, 1]")


def derive_seed(seed: int, *parts: object) -> int:
    """Stable per-stream seed: hash of the root seed plus stream labels."""
    text = ":".join([str(seed), *[str(p) for p in parts]])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _poisson(rng: random.Random, lam: float) -> int:
    """Poisson sample by sequential inversion; exact for the lambdas used here."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0:
        return 0
    if lam > 700:
        raise ValueError(f"swap-noise rate {lam} is unreasonably large")
    u = rng.random()
    p = math.exp(-lam)
    cumulative = p
    x = 0
    while u > cumulative:
        x += 1
        p *= lam / x
        cumulative += p
    return x


def noisy_ranking(
    reference: Sequence[str],
    swap_noise: float,
    substitution_rate: float,
    universe: Sequence[str],
    rng: random.Random,
) -> list[str]:
    """Perturb a reference ranking: adjacent swaps, then item substitutions.

    Substituted-in items come from the universe outside the reference and
    are never reused, so at substitution_rate 1.0 the output is disjoint
    from the reference. Raises when the universe cannot supply a requested
    substitution.
    """
    if not set(universe) >= set(reference):
        raise ValueError("universe must contain every reference item")
    items = list(reference)
    n = len(items)
    if n > 1:
        for _ in range(_poisson(rng, swap_noise * n)):
            pos = rng.randrange(n - 1)
            items[pos], items[pos + 1] = items[pos + 1], items[pos]
    if substitution_rate > 0.0:
        pool = sorted(set(universe) - set(reference))
        for i in range(n):
            if rng.random() < substitution_rate:
                if not pool:
                    raise ValueError(
                        "universe too small for the requested substitutions"
                    )
                items[i] = pool.pop(rng.randrange(len(pool)))
    return items


def synth_lists(config: SynthConfig) -> list[RankedList]:
    lists: list[RankedList] = []
    for t in range(config.tasks):
        task = f"task-{t:02d}"
        universe = [f"api-{t:02d}-{u:03d}" for u in range(config.universe_size)]
        task_rng = random.Random(derive_seed(config.seed, "task", t))
        reference = task_rng.sample(universe, config.k)
        for j in range(config.models):
            model = f"model-{j:02d}"
            model_rng = random.Random(derive_seed(config.seed, "list", t, j))
            items = noisy_ranking(
                reference,
                config.swap_noise,
                config.substitution_rate,
                universe,
                model_rng,
            )
            lists.append(
                RankedList(
                    model=model,
                    task=task,
                    items=tuple((item, None) for item in items),
                    k=config.k,
                )
            )
    return lists


def synth_run(config: SynthConfig) -> BenchmarkRun:
    return BenchmarkRun.from_lists(synth_lists(config))


def synth_records(config: SynthConfig) -> list[dict]:
    """The generated run in the same JSON block schema the ingest reader takes."""
    return run_to_blocks(synth_run(config))
