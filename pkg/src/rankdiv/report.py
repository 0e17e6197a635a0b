"""Report assembly: tiers, domain composites, and the full artifact bundle.

Every artifact is emitted in a fixed order with fixed numeric formatting
(6 decimal places, round-half-even), so identical inputs and flags produce
byte-identical bundles.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from statistics import fmean, pstdev

from . import __version__
from .consensus import consensus_report
from .core import BenchmarkRun, MetricValue
from .group import group_reliability
from .ingest import summarize
from .pairwise import (
    METRICS,
    ao_profile,
    matrix_from_scores,
    pair_scores,
)
from .stats import DegenerateDataError, TESTS, anova_oneway, kruskal_wallis, levene, permutation_test

TIER_HIGH_AO = 0.53
TIER_HIGH_TAU = 0.60
TIER_LOW_AO = 0.46
TIER_LOW_TAU = 0.35


def tier_classify(ao_mean: float, tau_mean: float) -> str:
    """Reliability tier from joint AO and tau thresholds; boundaries are high."""
    if ao_mean >= TIER_HIGH_AO and tau_mean >= TIER_HIGH_TAU:
        return "high"
    if ao_mean < TIER_LOW_AO and tau_mean < TIER_LOW_TAU:
        return "low"
    return "moderate"


@dataclass(frozen=True)
class ReliabilityTier:
    model_a: str
    model_b: str
    ao_mean: float
    tau_mean: float | None
    tier: str | None


@dataclass(frozen=True)
class DomainComposite:
    task: str
    ao: float
    jaccard: float
    rbo: float
    tau: float | None
    composite: float | None


@dataclass(frozen=True)
class ReportParams:
    k: int = 10
    rbo_p: float = 0.9
    rbo_variant: str = "trunc"
    missing_policy: str = "kplus1"
    min_support: int = 2
    impute_missing: bool = False
    ties: str = "error"
    group_by: str = "pair"
    perm: int = 0
    seed: int = 0

    def to_obj(self) -> dict:
        return {
            "k": self.k,
            "rbo_p": self.rbo_p,
            "rbo_variant": self.rbo_variant,
            "missing_policy": self.missing_policy,
            "min_support": self.min_support,
            "impute_missing": self.impute_missing,
            "ties": self.ties,
            "group_by": self.group_by,
            "perm": self.perm,
            "seed": self.seed,
        }


def reliability_tiers(run: BenchmarkRun, scores) -> list[ReliabilityTier]:
    ao = matrix_from_scores(scores, run.models, "ao")
    tau = matrix_from_scores(scores, run.models, "tau")
    tiers: list[ReliabilityTier] = []
    for model_a, model_b in combinations(run.models, 2):
        ao_mean = ao.cell(model_a, model_b)
        tau_mean = tau.cell(model_a, model_b)
        tiers.append(
            ReliabilityTier(
                model_a=model_a,
                model_b=model_b,
                ao_mean=ao_mean,
                tau_mean=tau_mean,
                tier=None if tau_mean is None else tier_classify(ao_mean, tau_mean),
            )
        )
    return tiers


def domain_composites(run: BenchmarkRun, scores) -> list[DomainComposite]:
    """Per task: mean of each metric over model pairs, plus their sum.

    Tau contributes signed; a task where every pair's tau is undefined gets
    a None tau and no composite.
    """
    out: list[DomainComposite] = []
    for task in run.tasks:
        cell = [s for s in scores if s.task == task]
        if not cell:
            continue
        ao = fmean(s.ao for s in cell)
        jac = fmean(s.jaccard for s in cell)
        rbo = fmean(s.rbo for s in cell)
        taus = [s.tau for s in cell if s.tau is not None]
        tau = fmean(taus) if taus else None
        out.append(
            DomainComposite(
                task=task,
                ao=ao,
                jaccard=jac,
                rbo=rbo,
                tau=tau,
                composite=None if tau is None else ao + jac + rbo + tau,
            )
        )
    return out


def ao_depth_curves(run: BenchmarkRun, k: int) -> tuple[list[dict], list[dict]]:
    """Per-pair mean AO profile over tasks, plus the across-pair mean +/- 1 SD."""
    per_pair: list[dict] = []
    by_depth: dict[int, list[float]] = {d: [] for d in range(1, k + 1)}
    for model_a, model_b in combinations(run.models, 2):
        profiles = []
        for task in run.tasks:
            la = run.get(model_a, task)
            lb = run.get(model_b, task)
            if la is None or lb is None:
                continue
            profiles.append(ao_profile(la.item_ids(), lb.item_ids(), k))
        if not profiles:
            continue
        for d in range(1, k + 1):
            mean_at_d = fmean(p[d - 1] for p in profiles)
            by_depth[d].append(mean_at_d)
            per_pair.append(
                {
                    "model_a": model_a,
                    "model_b": model_b,
                    "depth": d,
                    "mean_ao": mean_at_d,
                }
            )
    summary = [
        {
            "depth": d,
            "mean_ao": fmean(values) if values else None,
            "sd_ao": pstdev(values) if len(values) > 1 else 0.0,
        }
        for d, values in by_depth.items()
        if values
    ]
    return per_pair, summary


def _stats_rows(run: BenchmarkRun, scores, params: ReportParams) -> list[dict]:
    """All three tests per metric over the per-task score table.

    Default grouping treats model pairs as groups with tasks as
    observations; ``group_by="task"`` transposes that. Degenerate inputs
    (e.g. zero variance on an identical-list run) are reported as rows with
    an error marker instead of failing the bundle.
    """
    rows: list[dict] = []
    for metric in METRICS:
        if params.group_by == "pair":
            keys = sorted({(s.model_a, s.model_b) for s in scores})
            groups = [
                [
                    s.value(metric)
                    for s in scores
                    if (s.model_a, s.model_b) == key and s.value(metric) is not None
                ]
                for key in keys
            ]
            labels = [f"{a}|{b}" for a, b in keys]
        elif params.group_by == "task":
            keys = sorted({s.task for s in scores})
            groups = [
                [
                    s.value(metric)
                    for s in scores
                    if s.task == key and s.value(metric) is not None
                ]
                for key in keys
            ]
            labels = list(keys)
        else:
            raise ValueError(f"unknown group_by {params.group_by!r}")
        populated = [(lab, g) for lab, g in zip(labels, groups) if len(g) >= 2]
        labels = [lab for lab, _ in populated]
        groups = [g for _, g in populated]
        for test in TESTS:
            row: dict = {"metric": metric, "test": test, "group_by": params.group_by}
            try:
                if len(groups) < 2:
                    raise ValueError("fewer than 2 populated groups")
                if test == "anova":
                    result = anova_oneway(groups, labels=labels)
                elif test == "kruskal":
                    result = kruskal_wallis(groups, labels=labels)
                else:
                    result = levene(groups, labels=labels)
                row.update(
                    {
                        "statistic": result.statistic,
                        "df": ",".join(_format_number(v) for v in result.df),
                        "p_value": result.p_value,
                        "n_groups": len(groups),
                        "error": None,
                    }
                )
                if params.perm > 0:
                    perm = permutation_test(
                        groups, test, resamples=params.perm, seed=params.seed
                    )
                    row["p_perm"] = perm.p_value
            except (DegenerateDataError, ValueError) as exc:
                row.update(
                    {
                        "statistic": None,
                        "df": None,
                        "p_value": None,
                        "n_groups": len(groups),
                        "error": str(exc),
                    }
                )
                if params.perm > 0:
                    row["p_perm"] = None
            rows.append(row)
    return rows


def _range_flags(values: list[tuple[str, float, str]]) -> list[dict]:
    """Out-of-range audit rows built from named metric values."""
    flags: list[dict] = []
    for name, value, provenance in values:
        checked = MetricValue.checked(name, value, provenance)
        if not checked.in_range:
            flags.append(
                {
                    "metric": name,
                    "value": value,
                    "lo": checked.lo,
                    "hi": checked.hi,
                    "provenance": provenance,
                }
            )
    return flags


def pairwise_tables(
    run: BenchmarkRun,
    params: ReportParams,
    scores=None,
    range_audit: list[tuple[str, float, str]] | None = None,
) -> dict[str, list[dict]]:
    """Matrices per metric, the pair-mean summary grid, and the heatmap triples."""
    if scores is None:
        scores = pair_scores(
            run, k=params.k, rbo_p=params.rbo_p, rbo_variant=params.rbo_variant
        )
    tables: dict[str, list[dict]] = {}
    summary_rows: list[dict] = []
    for metric in METRICS:
        matrix = matrix_from_scores(
            scores,
            run.models,
            metric,
            rbo_p=params.rbo_p,
            k=params.k,
            rbo_variant=params.rbo_variant,
        )
        tables[f"pairwise_matrix_{metric}"] = matrix.rows()
        for model_a, model_b in combinations(run.models, 2):
            value = matrix.cell(model_a, model_b)
            undefined = matrix.undefined_counts[
                (model_a, model_b) if model_a <= model_b else (model_b, model_a)
            ]
            summary_rows.append(
                {
                    "metric": metric,
                    "model_a": model_a,
                    "model_b": model_b,
                    "mean": value,
                    "n_undefined_tasks": undefined,
                }
            )
            if value is not None and range_audit is not None:
                range_audit.append((metric, value, f"{model_a}|{model_b}"))
    tables["pairwise_summary"] = summary_rows
    tables["heatmap_grid"] = [
        {
            "metric": metric,
            "model_a": s.model_a,
            "model_b": s.model_b,
            "task": s.task,
            "value": s.value(metric),
        }
        for metric in METRICS
        for s in scores
    ]
    return tables


def group_reliability_rows(
    run: BenchmarkRun,
    params: ReportParams,
    range_audit: list[tuple[str, float, str]] | None = None,
) -> list[dict]:
    rows: list[dict] = []
    for task in run.tasks:
        lists = run.lists_for_task(task)
        if len(lists) < 2:
            continue
        rel = group_reliability(task, lists, policy=params.missing_policy, k=params.k)
        rows.append(
            {
                "task": rel.task,
                "w": rel.w,
                "alpha": rel.alpha,
                "m": rel.m,
                "n_items": rel.n_items,
                "score_source": rel.score_source,
            }
        )
        if range_audit is not None:
            range_audit.append(("w", rel.w, f"task {task}"))
            if rel.alpha is not None:
                range_audit.append(("alpha", rel.alpha, f"task {task}"))
    return rows


def consensus_tables(
    run: BenchmarkRun,
    params: ReportParams,
    range_audit: list[tuple[str, float, str]] | None = None,
) -> tuple[list[dict], list[dict]]:
    """Per-task consensus rows plus the per-item volatility table."""
    consensus_rows: list[dict] = []
    volatility_rows: list[dict] = []
    for task in run.tasks:
        lists = run.lists_for_task(task)
        if len(lists) < 2:
            continue
        rep = consensus_report(
            task,
            lists,
            min_support=params.min_support,
            impute_missing=params.impute_missing,
            policy=params.missing_policy,
            k=params.k,
        )
        consensus_rows.append(
            {
                "task": rep.task,
                "arv": rep.arv,
                "arv_items": rep.arv_items,
                "tau_bar": rep.tau_bar,
                "tau_pairs_used": rep.tau_pairs_used,
                "tau_pairs_undefined": rep.tau_pairs_undefined,
                "d_k_tau": rep.d_k_tau,
                "d_k_literal": rep.d_k_literal,
                "consensus_order": "|".join(rep.consensus_order),
            }
        )
        if range_audit is not None:
            if rep.d_k_tau is not None:
                range_audit.append(("d_k_tau", rep.d_k_tau, f"task {task}"))
            range_audit.append(("d_k_literal", rep.d_k_literal, f"task {task}"))
        for entry in rep.entries:
            volatility_rows.append(
                {
                    "task": task,
                    "item": entry.item,
                    "variance": entry.variance,
                    "support": entry.support,
                }
            )
    return consensus_rows, volatility_rows


def stats_rows(run: BenchmarkRun, params: ReportParams, scores=None) -> list[dict]:
    if scores is None:
        scores = pair_scores(
            run, k=params.k, rbo_p=params.rbo_p, rbo_variant=params.rbo_variant
        )
    return _stats_rows(run, scores, params)


def build_report(run: BenchmarkRun, params: ReportParams | None = None) -> dict[str, object]:
    """Assemble every report artifact as an ordered mapping name -> table.

    Tables are lists of row dicts with a fixed column order; the manifest
    entry is a plain dict. Writing is handled by ``write_bundle``.
    """
    params = params or ReportParams()
    scores = pair_scores(
        run, k=params.k, rbo_p=params.rbo_p, rbo_variant=params.rbo_variant
    )
    range_audit: list[tuple[str, float, str]] = []

    bundle: dict[str, object] = {}
    bundle.update(pairwise_tables(run, params, scores=scores, range_audit=range_audit))

    curves, curve_summary = ao_depth_curves(run, params.k)
    bundle["ao_depth_curves"] = curves
    bundle["ao_depth_summary"] = curve_summary

    bundle["group_reliability"] = group_reliability_rows(
        run, params, range_audit=range_audit
    )

    consensus_rows, volatility_rows = consensus_tables(
        run, params, range_audit=range_audit
    )
    bundle["consensus"] = consensus_rows
    bundle["volatility"] = volatility_rows

    bundle["reliability_tiers"] = [
        {
            "model_a": t.model_a,
            "model_b": t.model_b,
            "ao_mean": t.ao_mean,
            "tau_mean": t.tau_mean,
            "tier": t.tier,
        }
        for t in reliability_tiers(run, scores)
    ]

    bundle["domain_composites"] = [
        {
            "task": c.task,
            "ao": c.ao,
            "jaccard": c.jaccard,
            "rbo": c.rbo,
            "tau": c.tau,
            "composite": c.composite,
        }
        for c in domain_composites(run, scores)
    ]

    bundle["stats_tests"] = _stats_rows(run, scores, params)
    bundle["summary_table"] = summarize(run)
    bundle["range_flags"] = _range_flags(range_audit)
    return bundle


def build_manifest(
    run: BenchmarkRun,
    params: ReportParams,
    inputs: list[tuple[str, bytes]] | None = None,
) -> dict:
    """Reproducibility record: config, input digests, and run shape."""
    return {
        "tool": "rankdiv",
        "version": __version__,
        "params": params.to_obj(),
        "inputs": [
            {"path": name, "sha256": hashlib.sha256(data).hexdigest()}
            for name, data in (inputs or [])
        ],
        "models": list(run.models),
        "tasks": list(run.tasks),
        "n_lists": len(run.lists),
    }


# -- deterministic rendering ---------------------------------------------------


def _format_number(value: float) -> str:
    if isinstance(value, int) or (isinstance(value, float) and value.is_integer()):
        return str(int(value))
    return format(value, ".6f")


def _cell(value: object) -> object:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".6f")
    return value


def render_csv(rows: list[dict]) -> str:
    """Rows to CSV with stable header order and 6-decimal float formatting."""
    out = io.StringIO()
    if not rows:
        return ""
    writer = csv.writer(out, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(column)) for column in header])
    return out.getvalue()


def _json_ready(node: object) -> object:
    if isinstance(node, float):
        return round(node, 6)
    if isinstance(node, dict):
        return {key: _json_ready(value) for key, value in node.items()}
    if isinstance(node, (list, tuple)):
        return [_json_ready(value) for value in node]
    return node


def render_json(obj: object) -> str:
    return json.dumps(_json_ready(obj), indent=2, sort_keys=False) + "\n"


def write_bundle(
    bundle: dict[str, object],
    out_dir: str | Path,
    format: str = "csv",
    manifest: dict | None = None,
) -> list[Path]:
    """Write every artifact under ``out_dir``; returns the paths written.

    Tables go to .csv or .json per ``format``; the manifest is always JSON.
    """
    if format not in ("csv", "json"):
        raise ValueError(f"unknown format {format!r}, expected 'csv' or 'json'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name, table in bundle.items():
        if format == "csv" and isinstance(table, list):
            path = out / f"{name}.csv"
            path.write_text(render_csv(table), encoding="utf-8", newline="\n")
        else:
            path = out / f"{name}.json"
            path.write_text(render_json(table), encoding="utf-8", newline="\n")
        written.append(path)
    if manifest is not None:
        path = out / "manifest.json"
        path.write_text(render_json(manifest), encoding="utf-8", newline="\n")
        written.append(path)
    return written
