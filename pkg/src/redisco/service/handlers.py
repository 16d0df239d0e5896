"""Endpoint bodies: each handler maps a request model to a response model.

Handlers raise the library's own error types; the app layer translates them
to HTTP responses. Keeping them as plain functions means the test suite and
any future transport can call them without going through HTTP.
"""

from __future__ import annotations

import numpy as np

from .. import riskmetrics as rm
from ..config import ALL_FAMILIES, AnalysisConfig, QueueRequest, parse_metrics
from ..distfit import model_from_doc, model_to_doc
from ..errors import ConfigError, DataError
from ..ingest import DISCOVERY, REDISCOVERY, EventLog, Window, window_counts
from ..lmoments import diagram_to_csv, ratio_diagram_data, sample_lmoments
from ..pipeline import (
    StageFailure,
    _json_safe,
    analyze,
    fit_release,
    load_log,
    metric_rows,
    queue_block,
    report_json,
)
from ..synth import synth_csv
from . import models as m


def _window(w: m.WindowModel) -> Window:
    try:
        return Window(w.s, w.t)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc


def _families(names) -> tuple[str, ...]:
    families = tuple(names)
    if not families:
        raise ConfigError("at least one model family is required")
    unknown = [f for f in families if f not in ALL_FAMILIES]
    if unknown:
        raise ConfigError(
            f"unknown families {unknown!r}; expected a subset of {list(ALL_FAMILIES)}"
        )
    return families


def _resolve_release(log: EventLog, release: str | None) -> str:
    if release is not None:
        if release not in log.releases:
            raise DataError(f"unknown release {release!r}")
        return release
    ids = sorted(log.releases)
    if not ids:
        raise DataError("no defects in window: the event log has no releases")
    if len(ids) > 1:
        raise ConfigError(f"input has several releases {ids!r}; pass one explicitly")
    return ids[0]


def handle_validate(req: m.ValidateRequest) -> m.ValidateResponse:
    log = load_log(csv_text=req.csv_text)
    return m.ValidateResponse(
        releases=sorted(log.releases),
        n_events=len(log.events),
        n_discoveries=sum(1 for e in log.events if e.kind == DISCOVERY),
        n_rediscoveries=sum(1 for e in log.events if e.kind == REDISCOVERY),
    )


def _fit(req: m.FitRequest):
    log = load_log(csv_text=req.csv_text)
    release = _resolve_release(log, req.release)
    window = _window(req.window)
    families = _families(req.families)
    sample, lm, fitted, failures, selected = fit_release(log, release, window, families)
    return log, release, window, sample, lm, fitted, failures, selected


def handle_fit(req: m.FitRequest) -> m.FitResponse:
    _, release, _, sample, lm, fitted, failures, selected = _fit(req)
    return m.FitResponse(
        release=release,
        n_defects=sample.n_defects,
        total_rediscoveries=int(sum(sample.counts)),
        lmoments={
            "l1": lm.lambda1,
            "l2": lm.lambda2,
            "tau3": lm.tau3,
            "tau4": lm.tau4,
            "n": lm.n,
        },
        models=[_json_safe(model_to_doc(f)) for f in fitted],
        fit_failures=failures,
        selected_family=selected.family,
    )


def handle_metrics(req: m.MetricsRequest) -> m.MetricsResponse:
    requests = parse_metrics(req.metrics_text)
    if any(r.name == "m2" for r in requests) and req.customers is None:
        raise ConfigError("metric m2 needs the customer-base size")
    _, release, _, sample, _, _, _, selected = _fit(req)
    ctx = rm.MetricContext.from_fitted(
        selected, n_defects=sample.n_defects, customers=req.customers
    )
    return m.MetricsResponse(
        release=release,
        selected_family=selected.family,
        values=[m.MetricValue(**row) for row in metric_rows(ctx, requests)],
    )


def handle_queue(req: m.QueueRunRequest) -> m.QueueRunResponse:
    log = load_log(csv_text=req.csv_text)
    release = _resolve_release(log, req.release)
    window = _window(req.window)
    request = QueueRequest(
        mu=req.queue.mu,
        k_values=tuple(req.queue.k_values),
        n_events=req.queue.n_events,
        n_reps=req.queue.n_reps,
    )
    block, csv_text = queue_block(log, release, window, request, req.seed)
    return m.QueueRunResponse(release=release, csv_text=csv_text, **block)


def handle_diagram(req: m.DiagramRequest) -> m.DiagramResponse:
    log = load_log(csv_text=req.csv_text)
    window = _window(req.window)
    if req.release is not None:
        releases = [_resolve_release(log, req.release)]
    else:
        releases = sorted(log.releases)
        if not releases:
            raise DataError("no defects in window: the event log has no releases")
    points = []
    for release in releases:
        sample = window_counts(log, release, window)
        if sample.n_defects == 0:
            raise DataError(
                f"no defects in window [{window.s}, {window.t}) for release {release!r}"
            )
        points.append((release, sample_lmoments(np.asarray(sample.counts, dtype=float))))
    data = ratio_diagram_data(points)
    return m.DiagramResponse(
        points=[
            m.DiagramPoint(label=label, tau3=t3, tau4=t4) for t3, t4, label in data.points
        ],
        csv_text=diagram_to_csv(data),
    )


def handle_report(req: m.ReportRequest) -> m.ReportResponse:
    config = AnalysisConfig(
        input_path=req.input_label,
        window=_window(req.window),
        release=req.release,
        customers=req.customers,
        families=_families(req.families),
        metrics=parse_metrics(req.metrics_text),
        queue=None
        if req.queue is None
        else QueueRequest(
            mu=req.queue.mu,
            k_values=tuple(req.queue.k_values),
            n_events=req.queue.n_events,
            n_reps=req.queue.n_reps,
        ),
        seed=req.seed,
        out_dir=None,
    )
    report, files = analyze(config, csv_text=req.csv_text)
    files = dict(files)
    files["report.json"] = report_json(report)
    return m.ReportResponse(status="ok", report=_json_safe(report), files=files)


def handle_synth(req: m.SynthRequest) -> m.SynthResponse:
    model = model_from_doc(req.model_doc)
    window = _window(req.window)
    text = synth_csv(model, req.n_defects, window, req.seed, req.release_id)
    return m.SynthResponse(
        release_id=req.release_id, n_defects=req.n_defects, csv_text=text
    )


__all__ = [
    "handle_validate",
    "handle_fit",
    "handle_metrics",
    "handle_queue",
    "handle_diagram",
    "handle_report",
    "handle_synth",
    "StageFailure",
]
