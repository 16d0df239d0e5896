"""End-to-end analysis: ingest -> fit -> metrics -> queue -> report files.

The orchestration is a pure function of (AnalysisConfig, input bytes): the
same config and seed always produce byte-identical outputs. Reports carry no
timestamps, keys are emitted sorted, and every float is rendered with the
shortest decimal that round-trips. Non-finite values are mapped to JSON null.

On a mid-run failure the completed portion is preserved: run_pipeline writes
whatever was built to ``<out>/partial/`` together with a failure manifest
naming the stage and the error, then re-raises the original error so the
exit code still reflects its kind.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .config import AnalysisConfig, MetricRequest, QueueRequest, resolve_out_dir
from .distfit import FittedModel, fit_model, model_to_doc, qq_data
from .errors import DataError, NumericError, RediscoError
from .ingest import (
    EventLog,
    InterarrivalSample,
    RediscoverySample,
    Window,
    interarrival_times,
    load_events,
    parse_events,
    window_counts,
)
from .lmoments import (
    LMoments,
    diagram_to_csv,
    kappa_feasibility,
    ratio_diagram_data,
    sample_lmoments,
)
from .queueing import EmpiricalArrivals, SimConfig, staffing_sweep, sweep_to_csv
from . import riskmetrics as rm

__all__ = [
    "TOOL_NAME",
    "StageFailure",
    "PipelineResult",
    "analyze",
    "report_json",
    "run_pipeline",
    "fit_release",
    "metric_rows",
    "queue_block",
    "load_log",
]

TOOL_NAME = "redisco"

#: Longest count axis emitted for metric-vs-d curve files.
CURVE_COUNT_CAP = 1000
#: Number of load grid points for the coverage curve file.
LOAD_GRID_POINTS = 25
#: Confidence grid for the planning-value curve file.
ALPHA_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.995, 0.999)
#: Bin count for the interarrival-gap histogram file.
GAP_HISTOGRAM_BINS = 30


@dataclass
class StageFailure(Exception):
    """A pipeline stage failed; carries the partial results built so far."""

    stage: str
    error: RediscoError
    report: dict
    files: dict

    def __str__(self) -> str:
        return f"stage {self.stage!r}: {self.error}"


@dataclass(frozen=True)
class PipelineResult:
    report: dict
    files: dict
    out_dir: str
    written: tuple[str, ...]


# ---------------------------------------------------------------------------
# JSON rendering
# ---------------------------------------------------------------------------

def _json_safe(value):
    """Recursively replace non-finite floats with None for strict JSON."""
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def report_json(report: dict) -> str:
    """Deterministic report rendering: sorted keys, strict JSON, one trailing newline."""
    return json.dumps(_json_safe(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join("" if cell is None else _cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# Stage helpers (shared with the service handlers)
# ---------------------------------------------------------------------------

def load_log(input_path: str | None = None, csv_text: str | None = None) -> EventLog:
    """Load the event log from text (service mode) or from disk (CLI mode)."""
    try:
        if csv_text is not None:
            return parse_events(csv_text)
        if input_path is None:
            raise DataError("no input given")
        return load_events(input_path)
    except DataError as exc:
        if "empty input" in str(exc):
            raise DataError("no defects in window: the event file is empty") from exc
        raise


def _pick_releases(log: EventLog, release: str | None) -> list:
    if release is not None:
        if release not in log.releases:
            raise DataError(f"unknown release {release!r}")
        return [release]
    ids = sorted(log.releases)
    if not ids:
        raise DataError("no defects in window: the event log has no releases")
    return ids


def fit_release(
    log: EventLog, release_id: str, window: Window, families
) -> tuple[RediscoverySample, LMoments, list, dict, FittedModel]:
    """Window one release's counts and fit every requested family.

    Returns (sample, lmoments, fitted models, per-family failure messages,
    selected model). Families that fail to fit are recorded, not fatal;
    only a full wipe-out raises.
    """
    sample = window_counts(log, release_id, window)
    if sample.n_defects == 0:
        raise DataError(f"no defects in window [{window.s}, {window.t}) for release {release_id!r}")
    lm = sample_lmoments(np.asarray(sample.counts, dtype=float))
    models: list[FittedModel] = []
    failures: dict[str, str] = {}
    for family in families:
        try:
            models.append(fit_model(family, sample))
        except RediscoError as exc:
            failures[family] = f"{type(exc).__name__}: {exc}"
    if not models:
        detail = "; ".join(f"{k}: {v}" for k, v in failures.items())
        raise NumericError(f"no family could be fitted for release {release_id!r} ({detail})")
    selected = min(models, key=lambda m: m.aic)
    return sample, lm, models, failures, selected


def metric_rows(ctx: rm.MetricContext, requests) -> list:
    """Evaluate metric requests into {name, argument, threshold, value} rows."""
    rows = []
    for req in requests:
        name, arg = req.name, req.argument
        if name == "m1":
            threshold, value = int(arg), rm.m1(ctx, int(arg))
        elif name == "m2":
            threshold, value = rm.m2(ctx, arg)
        elif name == "m3":
            threshold, value = int(arg), rm.m3(ctx, int(arg))
        elif name == "m4":
            threshold, value = rm.threshold_for_load(ctx, arg), rm.m4(ctx, arg)
        elif name == "m5":
            threshold, value = rm.threshold_for_load(ctx, arg), rm.m5(ctx, arg)
        else:
            threshold, value = rm.planning_threshold(ctx, arg), rm.m6(ctx, arg)
        rows.append(
            {"name": name, "argument": float(arg), "threshold": int(threshold), "value": float(value)}
        )
    return rows


def queue_block(
    log: EventLog, release_id: str, window: Window, request: QueueRequest, seed: int
) -> tuple[dict, str]:
    """Run the staffing sweep off the windowed interarrival gaps.

    Returns the JSON block and the sweep CSV. The analytic column and the
    busy percentages use the bootstrap arrival rate (events per year implied
    by the mean gap) so both columns describe the same arrival stream.
    """
    gaps = interarrival_times(log, release_id, window)
    if not gaps.gaps:
        raise DataError(
            f"cannot run the queue analysis for release {release_id!r}: "
            f"{gaps.warning or 'no interarrival gaps in the window'}"
        )
    arrivals = EmpiricalArrivals(gaps.gaps)
    sim = SimConfig(n_events=request.n_events, n_reps=request.n_reps, seed=seed)
    rows = staffing_sweep(arrivals, request.mu, request.k_values, sim)
    block = {
        "mu": request.mu,
        "lambda_bootstrap": arrivals.rate,
        "lambda_window": gaps.arrival_rate_lambda,
        "n_gaps": len(gaps.gaps),
        "rows": [
            {
                "k": r.k,
                "wq_gmk_days": r.wq_gmk_days,
                "wq_gmk_ci": r.wq_gmk_ci,
                "wq_mmk_days": r.wq_mmk_days,
                "busy_percent": r.busy_percent,
            }
            for r in rows
        ],
    }
    return block, sweep_to_csv(rows)


def _interarrival_or_none(log, release_id, window) -> InterarrivalSample | None:
    try:
        return interarrival_times(log, release_id, window)
    except DataError:
        return None


# ---------------------------------------------------------------------------
# Curve and diagnostic files
# ---------------------------------------------------------------------------

def _curve_files(release_id: str, ctx: rm.MetricContext, models, sample) -> dict:
    files: dict[str, str] = {}
    d_hi = min(max(10, rm.planning_threshold(ctx, 0.999) + 2), ctx.grid_max, CURVE_COUNT_CAP)
    axis = range(0, d_hi + 1)
    files[f"{release_id}_m1_curve.csv"] = _csv(
        "d,value", ((d, rm.m1(ctx, d)) for d in axis)
    )
    files[f"{release_id}_m3_curve.csv"] = _csv(
        "d,value", ((d, rm.m3(ctx, d)) for d in axis)
    )
    total = rm.partial_expectation(ctx, 1, ctx.grid_max)
    loads = sorted({int(v) for v in np.linspace(0.0, math.floor(total), LOAD_GRID_POINTS)})
    files[f"{release_id}_m5_curve.csv"] = _csv(
        "L,value", ((load, rm.m5(ctx, float(load))) for load in loads)
    )
    files[f"{release_id}_m6_curve.csv"] = _csv(
        "alpha,value", ((a, rm.m6(ctx, a)) for a in ALPHA_GRID)
    )
    for model in models:
        files[f"{release_id}_qq_{model.family}.csv"] = _csv(
            "empirical,model", qq_data(model, sample)
        )
    distinct = sorted(set(sample.counts))
    sorted_counts = np.sort(np.asarray(sample.counts))
    n = sorted_counts.size
    header = "count,empirical," + ",".join(m.family for m in models)
    rows = []
    for c in distinct:
        ecdf = float(np.searchsorted(sorted_counts, c, side="right")) / (n + 1.0)
        rows.append(
            (c, ecdf, *(float(m.cdf(float(c))) / m.cdf_at_inf() for m in models))
        )
    files[f"{release_id}_cdf_overlay.csv"] = _csv(header, rows)
    return files


def _gap_histogram_file(release_id: str, gaps: InterarrivalSample | None) -> dict:
    if gaps is None or len(gaps.gaps) == 0:
        return {}
    values = np.asarray(gaps.gaps, dtype=float)
    counts, edges = np.histogram(values, bins=GAP_HISTOGRAM_BINS, range=(0.0, float(values.max())))
    rows = zip(edges[:-1], edges[1:], counts.astype(int))
    return {f"{release_id}_gap_histogram.csv": _csv("bin_left,bin_right,count", rows)}


# ---------------------------------------------------------------------------
# Top level
# ---------------------------------------------------------------------------

def _config_echo(config: AnalysisConfig) -> dict:
    return {
        "input_path": config.input_path,
        "release": config.release,
        "window": {"s": config.window.s, "t": config.window.t},
        "customers": config.customers,
        "families": list(config.families),
        "metrics": [{"name": m.name, "argument": m.argument} for m in config.metrics],
        "queue": None
        if config.queue is None
        else {
            "mu": config.queue.mu,
            "k_values": list(config.queue.k_values),
            "n_events": config.queue.n_events,
            "n_reps": config.queue.n_reps,
        },
        "seed": config.seed,
        "out_dir": config.out_dir,
    }


def analyze(config: AnalysisConfig, csv_text: str | None = None) -> tuple[dict, dict]:
    """Build the full report dict and the per-figure CSV files.

    Pure apart from reading the input file when csv_text is not supplied.
    Raises StageFailure wrapping the original error plus everything built
    before the failing stage.
    """
    report: dict = {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "rng_seed": config.seed,
        "config": _config_echo(config),
        "releases": [],
        "comparison": None,
        "warnings": [],
    }
    files: dict[str, str] = {}
    stage = "ingest"
    try:
        log = load_log(config.input_path, csv_text)
        releases = _pick_releases(log, config.release)
        diagram_points: list[tuple[str, LMoments]] = []
        contexts: list[tuple[str, rm.MetricContext]] = []
        for release_id in releases:
            stage = f"fit:{release_id}"
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                sample, lm, models, failures, selected = fit_release(
                    log, release_id, config.window, config.families
                )
                stage = f"metrics:{release_id}"
                ctx = rm.MetricContext.from_fitted(
                    selected, n_defects=sample.n_defects, customers=config.customers
                )
                metrics = metric_rows(ctx, config.metrics)
                staffing = _staffing_rows(ctx, config)
                files.update(_curve_files(release_id, ctx, models, sample))
                gaps = _interarrival_or_none(log, release_id, config.window)
                files.update(_gap_histogram_file(release_id, gaps))
                queue = None
                if config.queue is not None:
                    stage = f"queue:{release_id}"
                    queue, sweep_csv = queue_block(
                        log, release_id, config.window, config.queue, config.seed
                    )
                    files[f"{release_id}_queue_sweep.csv"] = sweep_csv
            diagram_points.append((release_id, lm))
            contexts.append((release_id, ctx))
            report["releases"].append(
                {
                    "release_id": release_id,
                    "sample": {
                        "n_defects": sample.n_defects,
                        "total_rediscoveries": int(sum(sample.counts)),
                        "max_count": int(max(sample.counts)),
                        "window": {"s": config.window.s, "t": config.window.t},
                    },
                    "lmoments": {
                        "l1": lm.lambda1,
                        "l2": lm.lambda2,
                        "tau3": lm.tau3,
                        "tau4": lm.tau4,
                        "n": lm.n,
                        "kappa_feasibility": kappa_feasibility(lm.tau3, lm.tau4).value,
                    },
                    "models": [model_to_doc(m) for m in models],
                    "fit_failures": failures,
                    "selected_family": selected.family,
                    "metrics": metrics,
                    "staffing": staffing,
                    "queue": queue,
                    "warnings": sorted({str(w.message) for w in caught}),
                }
            )
        stage = "report"
        files["ratio_diagram.csv"] = diagram_to_csv(ratio_diagram_data(diagram_points))
        if len(contexts) >= 2:
            d = next((int(m.argument) for m in config.metrics if m.name == "m1"), 10)
            report["comparison"] = [
                {
                    "release_id": row.release_id,
                    "m1": row.m1,
                    "exposure_ratio": row.exposure_ratio,
                    "rank": row.rank,
                    "d": d,
                }
                for row in rm.release_comparison(contexts, d)
            ]
    except RediscoError as exc:
        raise StageFailure(stage, exc, report, files) from exc
    return report, files


def _staffing_rows(ctx: rm.MetricContext, config: AnalysisConfig) -> list:
    """Team sizes implied by each requested planning confidence, if mu is known."""
    if config.queue is None:
        return []
    horizon = config.window.span
    rows = []
    for req in config.metrics:
        if req.name != "m6":
            continue
        value = rm.planning_rediscoveries(ctx, req.argument)
        rows.append(
            {
                "alpha": req.argument,
                "planning_value": value,
                "mu": config.queue.mu,
                "horizon_years": horizon,
                "people": rm.staffing_from_planning_value(value, config.queue.mu, horizon),
            }
        )
    return rows


def run_pipeline(config: AnalysisConfig, csv_text: str | None = None) -> PipelineResult:
    """Analyze and write the report plus CSV datasets under the output directory.

    On failure, partial outputs land in ``<out>/partial/`` next to a
    ``failure_manifest.json`` naming the stage, and the original error is
    re-raised unchanged.
    """
    out_dir = resolve_out_dir(config.out_dir)
    try:
        report, files = analyze(config, csv_text)
    except StageFailure as failure:
        partial_dir = os.path.join(out_dir, "partial")
        manifest = {
            "stage": failure.stage,
            "error_kind": type(failure.error).__name__,
            "message": str(failure.error),
            "exit_code": failure.error.exit_code,
        }
        payload = dict(failure.files)
        payload["partial_report.json"] = report_json(failure.report)
        payload["failure_manifest.json"] = report_json(manifest)
        _write_files(partial_dir, payload)
        raise failure.error from failure
    files = dict(files)
    files["report.json"] = report_json(report)
    written = _write_files(out_dir, files)
    return PipelineResult(report=report, files=files, out_dir=out_dir, written=written)


def _write_files(out_dir: str, files: dict) -> tuple[str, ...]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(files[name])
        written.append(path)
    return tuple(written)
