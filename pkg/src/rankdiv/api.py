"""HTTP service exposing the metric suite for multi-client use.

Stateless request/response wrappers over the library: clients post ranked
lists in the same block schema the file pipeline ingests and receive the
computed tables as JSON. The CLI does not route through this service; it
exists for long-running deployments (e.g. an orchestrator querying
agreement diagnostics).
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .core import BenchmarkRun
from .ingest import ParseError, ValidationError, records_from_obj, run_to_blocks, validate
from .report import (
    ReportParams,
    build_manifest,
    build_report,
    consensus_tables,
    group_reliability_rows,
    pairwise_tables,
    stats_rows,
)
from .synth import SynthConfig, synth_records

app = FastAPI(
    title="rankdiv",
    version=__version__,
    description="Agreement and divergence metrics for multi-agent ranked lists.",
)


class ResultEntry(BaseModel):
    model_config = ConfigDict(extra="allow")

    rank: int | float | str | None = None
    api_name: str = ""
    relevance: float | int | str | None = None


class ListBlock(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: str
    task: str
    results: list[ResultEntry]


class RunRequest(BaseModel):
    records: list[ListBlock]
    k: int = Field(default=10, ge=1)
    ties: Literal["error", "order"] = "error"


class AnalysisRequest(RunRequest):
    rbo_p: float = Field(default=0.9, gt=0.0, lt=1.0)
    rbo_variant: Literal["trunc", "extra"] = "trunc"
    missing_policy: Literal["kplus1", "intersection"] = "kplus1"
    min_support: int = Field(default=2, ge=1)
    impute_missing: bool = False
    group_by: Literal["pair", "task"] = "pair"
    perm: int = Field(default=0, ge=0)
    seed: int = 0


class SynthRequest(BaseModel):
    models: int = Field(default=5, ge=2)
    tasks: int = Field(default=15, ge=1)
    k: int = Field(default=10, ge=1)
    universe_size: int = Field(default=30, ge=1)
    swap_noise: float = Field(default=0.0, ge=0.0)
    substitution_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    seed: int = 0


def _validated(request: RunRequest):
    blocks = [block.model_dump() for block in request.records]
    try:
        records = records_from_obj(blocks, source="<request>")
        return validate(records, k=request.k, ties=request.ties)
    except ValidationError as exc:
        raise HTTPException(
            status_code=422,
            detail={"message": str(exc), "report": exc.report.to_obj()},
        ) from exc
    except (ParseError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _build_run(request: RunRequest) -> BenchmarkRun:
    run, _ = _validated(request)
    return run


def _params(request: AnalysisRequest) -> ReportParams:
    return ReportParams(
        k=request.k,
        rbo_p=request.rbo_p,
        rbo_variant=request.rbo_variant,
        missing_policy=request.missing_policy,
        min_support=request.min_support,
        impute_missing=request.impute_missing,
        ties=request.ties,
        group_by=request.group_by,
        perm=request.perm,
        seed=request.seed,
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/validate")
def validate_endpoint(request: RunRequest) -> dict:
    run, report = _validated(request)
    return {"run": run_to_blocks(run), "report": report.to_obj()}


@app.post("/pairwise")
def pairwise_endpoint(request: AnalysisRequest) -> dict:
    run = _build_run(request)
    try:
        return {"tables": pairwise_tables(run, _params(request))}
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/group")
def group_endpoint(request: AnalysisRequest) -> dict:
    run = _build_run(request)
    try:
        return {"reliability": group_reliability_rows(run, _params(request))}
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/consensus")
def consensus_endpoint(request: AnalysisRequest) -> dict:
    run = _build_run(request)
    try:
        consensus_rows, volatility_rows = consensus_tables(run, _params(request))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return {"consensus": consensus_rows, "volatility": volatility_rows}


@app.post("/stats")
def stats_endpoint(request: AnalysisRequest) -> dict:
    run = _build_run(request)
    try:
        return {"tests": stats_rows(run, _params(request))}
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/report")
def report_endpoint(request: AnalysisRequest) -> dict:
    run = _build_run(request)
    params = _params(request)
    try:
        bundle = build_report(run, params)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return {"files": bundle, "manifest": build_manifest(run, params)}


@app.post("/synth")
def synth_endpoint(request: SynthRequest) -> dict:
    try:
        config = SynthConfig(
            models=request.models,
            tasks=request.tasks,
            k=request.k,
            universe_size=request.universe_size,
            swap_noise=request.swap_noise,
            substitution_rate=request.substitution_rate,
            seed=request.seed,
        )
        return {"records": synth_records(config)}
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
