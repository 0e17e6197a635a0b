"""Parse raw per-model result files into a validated benchmark run.

Two input shapes are accepted: JSON blocks ({model, task, results: [...]},
singly or in an array, with flat row objects also tolerated so summarize
output round-trips) and flat CSV with header model,task,rank,api_name,
relevance. Every normalization the validator performs (dedup, rank
reassignment, relevance clamping, truncation) is recorded in the
validation report, so input records are always accounted for:
record count in = item count out + dropped records in the report.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field

from .core import BenchmarkRun, InvalidItemError, RankedList, canonicalize_item

FORMATS = ("json", "csv")
CSV_COLUMNS = ("model", "task", "rank", "api_name", "relevance")

# Issue codes whose entries each account for one dropped input record.
DROP_CODES = frozenset(
    {"MISSING_FIELD", "INVALID_ITEM", "INVALID_RANK", "DUP_ITEM", "TRUNCATED"}
)


class ParseError(ValueError):
    """Input bytes could not be decoded into records."""


@dataclass(frozen=True)
class Issue:
    severity: str  # "warn" | "error"
    code: str
    location: str
    message: str


@dataclass
class ValidationReport:
    entries: list[Issue] = field(default_factory=list)

    def add(self, severity: str, code: str, location: str, message: str) -> None:
        self.entries.append(Issue(severity, code, location, message))

    def warn(self, code: str, location: str, message: str) -> None:
        self.add("warn", code, location, message)

    def error(self, code: str, location: str, message: str) -> None:
        self.add("error", code, location, message)

    def counts(self) -> dict[str, int]:
        return dict(sorted(Counter(e.code for e in self.entries).items()))

    def has_errors(self) -> bool:
        return any(e.severity == "error" for e in self.entries)

    def dropped_records(self) -> int:
        return sum(1 for e in self.entries if e.code in DROP_CODES)

    def to_obj(self) -> dict:
        return {
            "entries": [
                {
                    "severity": e.severity,
                    "code": e.code,
                    "location": e.location,
                    "message": e.message,
                }
                for e in self.entries
            ],
            "counts": self.counts(),
            "n_errors": sum(1 for e in self.entries if e.severity == "error"),
            "n_warnings": sum(1 for e in self.entries if e.severity == "warn"),
        }


class ValidationError(Exception):
    """Validation hit a fatal condition; carries the full report."""

    def __init__(self, message: str, report: ValidationReport):
        super().__init__(message)
        self.report = report


@dataclass
class RawRecord:
    """One possibly-dirty input row; no invariants hold before validation."""

    model: str
    task: str
    rank: object
    api_name: str
    relevance: object
    extra: dict = field(default_factory=dict)
    location: str = "<input>"


def parse_raw(data: bytes | str, format: str, source: str = "<input>") -> list[RawRecord]:
    """Decode a JSON or CSV payload into raw records, extra fields preserved."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}, expected one of {FORMATS}")
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(
                f"{source}: not valid UTF-8 at byte {exc.start}"
            ) from exc
    else:
        text = data
    if format == "json":
        return _parse_json(text, source)
    return _parse_csv(text, source)


def _parse_json(text: str, source: str) -> list[RawRecord]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{source}: malformed JSON at line {exc.lineno} column {exc.colno} "
            f"(char {exc.pos}): {exc.msg}"
        ) from exc
    return records_from_obj(doc, source)


def records_from_obj(doc: object, source: str = "<input>") -> list[RawRecord]:
    """Raw records from already-decoded JSON structure (blocks or flat rows)."""
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list):
        raise ParseError(f"{source}: expected a JSON object or array of objects")
    records: list[RawRecord] = []
    for i, node in enumerate(doc):
        if not isinstance(node, dict):
            raise ParseError(f"{source}: element [{i}] is not an object")
        if "results" in node:
            results = node["results"]
            if not isinstance(results, list):
                raise ParseError(f"{source}: [{i}].results is not an array")
            model = _text(node.get("model"))
            task = _text(node.get("task"))
            for j, entry in enumerate(results):
                if not isinstance(entry, dict):
                    raise ParseError(
                        f"{source}: [{i}].results[{j}] is not an object"
                    )
                records.append(
                    _record(model, task, entry, f"{source}:[{i}].results[{j}]")
                )
        else:
            records.append(
                _record(
                    _text(node.get("model")),
                    _text(node.get("task")),
                    node,
                    f"{source}:[{i}]",
                )
            )
    return records


def _record(model: str, task: str, entry: dict, location: str) -> RawRecord:
    extra = {
        key: value
        for key, value in entry.items()
        if key not in ("model", "task", "rank", "api_name", "relevance")
    }
    return RawRecord(
        model=model,
        task=task,
        rank=entry.get("rank"),
        api_name=_text(entry.get("api_name")),
        relevance=entry.get("relevance"),
        extra=extra,
        location=location,
    )


def _parse_csv(text: str, source: str) -> list[RawRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ParseError(f"{source}: empty CSV (no header row)")
    missing = [c for c in ("model", "task", "rank", "api_name") if c not in reader.fieldnames]
    if missing:
        raise ParseError(f"{source}: CSV header missing columns {missing}")
    records: list[RawRecord] = []
    try:
        for row in reader:
            extra = {
                key: value
                for key, value in row.items()
                if key not in CSV_COLUMNS and key is not None
            }
            relevance = row.get("relevance")
            records.append(
                RawRecord(
                    model=_text(row.get("model")),
                    task=_text(row.get("task")),
                    rank=row.get("rank"),
                    api_name=_text(row.get("api_name")),
                    relevance=None if relevance in (None, "") else relevance,
                    extra=extra,
                    location=f"{source}:line {reader.line_num}",
                )
            )
    except csv.Error as exc:
        raise ParseError(
            f"{source}: malformed CSV near line {reader.line_num}: {exc}"
        ) from exc
    return records


def _text(value: object) -> str:
    return value if isinstance(value, str) else ("" if value is None else str(value))


def _coerce_rank(value: object) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return int(value) if value.is_integer() else None
    if isinstance(value, str):
        try:
            return _coerce_rank(int(value))
        except ValueError:
            try:
                return _coerce_rank(float(value))
            except ValueError:
                return None
    return None


def _coerce_number(value: object) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return None
    return None


@dataclass
class _Entry:
    rank: int
    item: str
    relevance: float | None
    location: str
    order: int


def validate(
    records: list[RawRecord], k: int = 10, ties: str = "error"
) -> tuple[BenchmarkRun, ValidationReport]:
    """Normalize raw records into a benchmark run plus an issue report.

    Per (model, task): item names are canonicalized, duplicates dropped
    keeping the lowest declared rank, entries sorted by declared rank and
    re-ranked densely, relevance clamped to [0, 100] percent and converted
    to a fraction, and lists truncated to depth k. Tied declared ranks over
    distinct items are fatal unless ``ties="order"`` accepts file order.

    Raises ValidationError (carrying the report) on ambiguous ordering or
    when no valid list survives.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if ties not in ("error", "order"):
        raise ValueError(f"ties must be 'error' or 'order', got {ties!r}")
    report = ValidationReport()
    groups: dict[tuple[str, str], list[_Entry]] = {}
    for order, rec in enumerate(records):
        model = rec.model.strip()
        task = rec.task.strip()
        if not model or not task:
            report.error(
                "MISSING_FIELD", rec.location, "record lacks model or task label"
            )
            continue
        try:
            item = canonicalize_item(rec.api_name)
        except InvalidItemError:
            report.error(
                "INVALID_ITEM", rec.location, "api_name is empty or whitespace-only"
            )
            continue
        rank = _coerce_rank(rec.rank)
        if rank is None:
            report.error(
                "INVALID_RANK",
                rec.location,
                f"rank {rec.rank!r} is not an integer",
            )
            continue
        relevance: float | None = None
        if rec.relevance is not None:
            value = _coerce_number(rec.relevance)
            if value is None:
                report.warn(
                    "RELEVANCE_INVALID",
                    rec.location,
                    f"relevance {rec.relevance!r} is not numeric; treated as missing",
                )
            else:
                clamped = min(100.0, max(0.0, value))
                if clamped != value:
                    report.warn(
                        "RELEVANCE_CLAMP",
                        rec.location,
                        f"relevance {value} clamped to {clamped}",
                    )
                # 8 fraction decimals = 6 decimals in percent, the emission
                # precision; keeps summarize -> re-validate an exact fixed point
                relevance = round(clamped / 100.0, 8)
        groups.setdefault((model, task), []).append(
            _Entry(rank=rank, item=item, relevance=relevance, location=rec.location, order=order)
        )

    lists: list[RankedList] = []
    for model, task in sorted(groups):
        entries = groups[(model, task)]
        where = f"({model}, {task})"

        best: dict[str, _Entry] = {}
        for entry in entries:
            held = best.get(entry.item)
            if held is None:
                best[entry.item] = entry
                continue
            keep, drop = (
                (held, entry)
                if (held.rank, held.order) <= (entry.rank, entry.order)
                else (entry, held)
            )
            best[entry.item] = keep
            report.warn(
                "DUP_ITEM",
                drop.location,
                f"{where}: duplicate item {drop.item!r} at rank {drop.rank} "
                f"dropped (kept rank {keep.rank})",
            )
        survivors = sorted(best.values(), key=lambda e: (e.rank, e.order))

        tied_ranks = sorted(
            rank
            for rank, count in Counter(e.rank for e in survivors).items()
            if count > 1
        )
        if tied_ranks:
            severity = "error" if ties == "error" else "warn"
            message = (
                f"{where}: ambiguous ordering, declared rank(s) {tied_ranks} "
                f"shared by distinct items"
            )
            if ties == "order":
                message += "; file order accepted"
            report.add(severity, "RANK_TIE", where, message)
            if ties == "error":
                continue

        declared = [e.rank for e in survivors]
        unique_declared = sorted(set(declared))
        if unique_declared != list(range(1, len(unique_declared) + 1)):
            report.warn(
                "RANK_GAP",
                where,
                f"{where}: declared ranks {declared} reassigned densely 1..{len(survivors)}",
            )

        if len(survivors) > k:
            for dropped in survivors[k:]:
                report.warn(
                    "TRUNCATED",
                    dropped.location,
                    f"{where}: item {dropped.item!r} at position > k={k} dropped",
                )
            survivors = survivors[:k]

        if survivors:
            lists.append(
                RankedList(
                    model=model,
                    task=task,
                    items=tuple((e.item, e.relevance) for e in survivors),
                    k=k,
                )
            )

    if any(e.code == "RANK_TIE" and e.severity == "error" for e in report.entries):
        raise ValidationError("ambiguous ordering (tied declared ranks)", report)
    if not lists:
        report.error("EMPTY_RUN", "<input>", "no valid records")
        raise ValidationError("no valid records", report)
    return BenchmarkRun.from_lists(lists), report


def run_to_blocks(run: BenchmarkRun) -> list[dict]:
    """Serialize a run back into the JSON block schema the parser accepts.

    Relevance goes out in percent (the input unit); missing relevance is
    omitted. Re-validating the output reproduces the run.
    """
    blocks: list[dict] = []
    for ranked in run.lists:
        results = []
        for position, (item, relevance) in enumerate(ranked.items, start=1):
            entry: dict = {"rank": position, "api_name": item}
            if relevance is not None:
                entry["relevance"] = round(relevance * 100.0, 12)
            results.append(entry)
        blocks.append({"model": ranked.model, "task": ranked.task, "results": results})
    return blocks


def summarize(run: BenchmarkRun) -> list[dict]:
    """One flat row per (model, task, rank, item, relevance), ready to re-ingest.

    Relevance is emitted back in percent so the table matches the input
    schema; re-validating the output reproduces the run exactly.
    """
    rows: list[dict] = []
    for ranked in run.lists:
        for position, (item, relevance) in enumerate(ranked.items, start=1):
            rows.append(
                {
                    "model": ranked.model,
                    "task": ranked.task,
                    "rank": position,
                    "api_name": item,
                    "relevance": None if relevance is None else round(relevance * 100.0, 12),
                }
            )
    rows.sort(key=lambda r: (r["task"], r["model"], r["rank"]))
    return rows
