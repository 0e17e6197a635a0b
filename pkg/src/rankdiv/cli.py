"""Command-line pipeline: validate -> pairwise -> group -> consensus -> stats -> report.

Exit codes: 0 success, 1 validation errors present, 2 usage error, 3 I/O
error. All file outputs are deterministic for identical inputs and flags.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .core import BenchmarkRun
from .ingest import (
    ParseError,
    ValidationError,
    ValidationReport,
    parse_raw,
    run_to_blocks,
    summarize,
    validate,
)
from .report import (
    ReportParams,
    build_manifest,
    build_report,
    consensus_tables,
    group_reliability_rows,
    pairwise_tables,
    render_csv,
    render_json,
    stats_rows,
    write_bundle,
)
from .synth import SynthConfig, synth_records


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            _echo_report(exc.report)
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except ParseError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except OSError as exc:
            location = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
            click.echo(f"i/o error{location}: {exc}", err=True)
            sys.exit(3)
        except ValueError as exc:
            click.echo(f"usage error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _echo_report(report: ValidationReport) -> None:
    for entry in report.entries:
        click.echo(
            f"{entry.severity}: {entry.code} at {entry.location}: {entry.message}",
            err=True,
        )


def _detect_format(path: str, override: str | None) -> str:
    if override:
        return override
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return "json"
    if suffix == ".csv":
        return "csv"
    raise ValueError(f"cannot infer input format of {path!r}; pass --input-format")


def _load_run(
    inputs: tuple[str, ...], input_format: str | None, k: int, ties: str
) -> tuple[BenchmarkRun, ValidationReport, list[tuple[str, bytes]]]:
    records = []
    raw: list[tuple[str, bytes]] = []
    for path in inputs:
        data = Path(path).read_bytes()
        raw.append((path, data))
        records.extend(parse_raw(data, _detect_format(path, input_format), source=path))
    run, report = validate(records, k=k, ties=ties)
    return run, report, raw


def _finish(report: ValidationReport) -> None:
    """Surface validation issues; errors set exit code 1 after outputs are written."""
    if report.entries:
        counts = ", ".join(f"{code}={n}" for code, n in report.counts().items())
        click.echo(f"validation issues: {counts}", err=True)
    if report.has_errors():
        sys.exit(1)


def _emit_table(rows: list[dict], out: str | None, format: str) -> None:
    text = render_csv(rows) if format == "csv" else render_json(rows)
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        click.echo(text, nl=False)


def _input_options(fn):
    fn = click.option(
        "--input-format",
        type=click.Choice(["json", "csv"]),
        default=None,
        help="Override format detection by file extension.",
    )(fn)
    fn = click.option("--k", type=int, default=10, show_default=True, help="Ranking depth.")(fn)
    fn = click.option(
        "--ties",
        type=click.Choice(["error", "order"]),
        default="error",
        show_default=True,
        help="Tied declared ranks: hard error, or accept file order.",
    )(fn)
    fn = click.argument("inputs", nargs=-1, required=True, type=click.Path())(fn)
    return fn


def _format_option(fn):
    return click.option(
        "--format",
        "format_",
        type=click.Choice(["csv", "json"]),
        default="csv",
        show_default=True,
        help="Output table format.",
    )(fn)


def _analysis_options(fn):
    fn = click.option("--rbo-p", type=float, default=0.9, show_default=True, help="RBO persistence parameter.")(fn)
    fn = click.option(
        "--rbo-variant",
        type=click.Choice(["trunc", "extra"]),
        default="trunc",
        show_default=True,
        help="Finite-depth RBO, or the extrapolated variant that reaches 1.",
    )(fn)
    fn = click.option(
        "--missing-policy",
        type=click.Choice(["kplus1", "intersection"]),
        default="kplus1",
        show_default=True,
        help="Rank completion for items a model did not return.",
    )(fn)
    fn = click.option("--min-support", type=int, default=2, show_default=True, help="Models required to include an item in ARV.")(fn)
    fn = click.option("--impute-missing", is_flag=True, help="Impute rank k+1 for missing items in volatility.")(fn)
    return fn


@click.group()
@click.version_option()
def main() -> None:
    """Quantify agreement and divergence among agents' ranked lists."""


@main.command("validate")
@_input_options
@click.option("--report-out", type=click.Path(), default=None, help="Write the issue report as JSON.")
@click.option("--normalized-out", type=click.Path(), default=None, help="Write the normalized run as JSON blocks.")
@_handle_errors
def cmd_validate(inputs, input_format, k, ties, report_out, normalized_out) -> None:
    """Parse and normalize inputs, reporting every issue found."""
    run, report, _ = _load_run(inputs, input_format, k, ties)
    if report_out:
        Path(report_out).write_text(render_json(report.to_obj()), encoding="utf-8", newline="\n")
    if normalized_out:
        Path(normalized_out).write_text(render_json(run_to_blocks(run)), encoding="utf-8", newline="\n")
    click.echo(
        f"ok: {len(run.lists)} lists, {len(run.models)} models, {len(run.tasks)} tasks"
    )
    _echo_report(report)
    _finish(report)


@main.command("summarize")
@_input_options
@_format_option
@click.option("--out", type=click.Path(), default=None, help="Output path (default stdout).")
@_handle_errors
def cmd_summarize(inputs, input_format, k, ties, format_, out) -> None:
    """Consolidate inputs into one flat (model, task, rank, item) table."""
    run, report, _ = _load_run(inputs, input_format, k, ties)
    _emit_table(summarize(run), out, format_)
    _finish(report)


@main.command("pairwise")
@_input_options
@_analysis_options
@_format_option
@click.option("--out-dir", type=click.Path(), default=None, help="Write matrices and grid here instead of stdout.")
@_handle_errors
def cmd_pairwise(
    inputs, input_format, k, ties, rbo_p, rbo_variant, missing_policy,
    min_support, impute_missing, format_, out_dir,
) -> None:
    """Pairwise similarity matrices (AO, Jaccard, RBO, tau) over all tasks."""
    run, report, _ = _load_run(inputs, input_format, k, ties)
    params = ReportParams(k=k, rbo_p=rbo_p, rbo_variant=rbo_variant)
    tables = pairwise_tables(run, params)
    if out_dir:
        write_bundle(tables, out_dir, format=format_)
    else:
        _emit_table(tables["pairwise_summary"], None, format_)
    _finish(report)


@main.command("group")
@_input_options
@_analysis_options
@_format_option
@click.option("--out", type=click.Path(), default=None, help="Output path (default stdout).")
@_handle_errors
def cmd_group(
    inputs, input_format, k, ties, rbo_p, rbo_variant, missing_policy,
    min_support, impute_missing, format_, out,
) -> None:
    """Per-task group reliability: Kendall W and Cronbach alpha."""
    run, report, _ = _load_run(inputs, input_format, k, ties)
    params = ReportParams(k=k, missing_policy=missing_policy)
    _emit_table(group_reliability_rows(run, params), out, format_)
    _finish(report)


@main.command("consensus")
@_input_options
@_analysis_options
@_format_option
@click.option("--out", type=click.Path(), default=None, help="Output path (default stdout).")
@click.option("--volatility-out", type=click.Path(), default=None, help="Also write the per-item volatility table.")
@_handle_errors
def cmd_consensus(
    inputs, input_format, k, ties, rbo_p, rbo_variant, missing_policy,
    min_support, impute_missing, format_, out, volatility_out,
) -> None:
    """Per-task volatility, ARV, consensus distance, and consensus order."""
    run, report, _ = _load_run(inputs, input_format, k, ties)
    params = ReportParams(
        k=k,
        missing_policy=missing_policy,
        min_support=min_support,
        impute_missing=impute_missing,
    )
    consensus_rows, volatility_rows = consensus_tables(run, params)
    _emit_table(consensus_rows, out, format_)
    if volatility_out:
        text = render_csv(volatility_rows) if format_ == "csv" else render_json(volatility_rows)
        Path(volatility_out).write_text(text, encoding="utf-8", newline="\n")
    _finish(report)


@main.command("stats")
@_input_options
@_analysis_options
@_format_option
@click.option("--group-by", type=click.Choice(["pair", "task"]), default="pair", show_default=True)
@click.option("--perm", type=int, default=0, show_default=True, help="Permutation resamples (0 = analytic only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Output path (default stdout).")
@_handle_errors
def cmd_stats(
    inputs, input_format, k, ties, rbo_p, rbo_variant, missing_policy,
    min_support, impute_missing, format_, group_by, perm, seed, out,
) -> None:
    """ANOVA, Kruskal-Wallis, and Levene tests over the per-task score table."""
    run, report, _ = _load_run(inputs, input_format, k, ties)
    params = ReportParams(
        k=k, rbo_p=rbo_p, rbo_variant=rbo_variant, group_by=group_by,
        perm=perm, seed=seed,
    )
    _emit_table(stats_rows(run, params), out, format_)
    _finish(report)


@main.command("report")
@_input_options
@_analysis_options
@_format_option
@click.option("--out-dir", type=click.Path(), required=True, help="Directory for the artifact bundle.")
@click.option("--group-by", type=click.Choice(["pair", "task"]), default="pair", show_default=True)
@click.option("--perm", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--manifest", "manifest_out", type=click.Path(), default=None, help="Also write the manifest to this path.")
@_handle_errors
def cmd_report(
    inputs, input_format, k, ties, rbo_p, rbo_variant, missing_policy,
    min_support, impute_missing, format_, out_dir, group_by, perm, seed, manifest_out,
) -> None:
    """Write the full artifact bundle: matrices, curves, reliability, consensus, stats."""
    run, report, raw = _load_run(inputs, input_format, k, ties)
    params = ReportParams(
        k=k, rbo_p=rbo_p, rbo_variant=rbo_variant, missing_policy=missing_policy,
        min_support=min_support, impute_missing=impute_missing, ties=ties,
        group_by=group_by, perm=perm, seed=seed,
    )
    bundle = build_report(run, params)
    manifest = build_manifest(run, params, inputs=raw)
    written = write_bundle(bundle, out_dir, format=format_, manifest=manifest)
    if manifest_out:
        Path(manifest_out).write_text(render_json(manifest), encoding="utf-8", newline="\n")
    click.echo(f"wrote {len(written)} artifacts to {out_dir}")
    _finish(report)


@main.command("synth")
@click.option("--models", type=int, default=5, show_default=True)
@click.option("--tasks", type=int, default=15, show_default=True)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--universe-size", type=int, default=30, show_default=True)
@click.option("--swap-noise", type=float, default=0.0, show_default=True, help="Expected adjacent transpositions per item.")
@click.option("--substitution-rate", type=float, default=0.0, show_default=True, help="Probability an item is replaced by an unseen one.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Output path (default stdout).")
@_handle_errors
def cmd_synth(models, tasks, k, universe_size, swap_noise, substitution_rate, seed, out) -> None:
    """Generate a synthetic run in the same JSON schema the pipeline ingests."""
    config = SynthConfig(
        models=models,
        tasks=tasks,
        k=k,
        universe_size=universe_size,
        swap_noise=swap_noise,
        substitution_rate=substitution_rate,
        seed=seed,
    )
    text = json.dumps(synth_records(config), indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        click.echo(text, nl=False)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@_handle_errors
def cmd_serve(host, port) -> None:
    """Run the HTTP service exposing the metric suite."""
    import uvicorn

    from .api import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
