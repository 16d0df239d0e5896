"""Application factory and error translation for the HTTP layer."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .._version import __version__
from ..errors import ConfigError, RediscoError
from ..pipeline import StageFailure, report_json
from . import handlers
from . import models as m

#: HTTP status for each library error kind; everything else is a 500.
_STATUS = {2: 400, 3: 422, 4: 422}


def _error_response(exc: RediscoError, stage: str | None = None, partial: dict | None = None):
    payload = m.ErrorPayload(
        error_kind=type(exc).__name__,
        message=str(exc),
        exit_code=exc.exit_code,
        stage=stage,
        partial_files=partial,
    )
    return JSONResponse(
        status_code=_STATUS.get(exc.exit_code, 500),
        content=payload.model_dump(),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="rediscovery risk service", version=__version__)

    @app.exception_handler(RediscoError)
    async def _on_error(request: Request, exc: RediscoError):
        return _error_response(exc)

    @app.exception_handler(StageFailure)
    async def _on_stage_failure(request: Request, exc: StageFailure):
        partial = dict(exc.files)
        partial["partial_report.json"] = report_json(exc.report)
        return _error_response(exc.error, stage=exc.stage, partial=partial)

    @app.exception_handler(RequestValidationError)
    async def _on_validation(request: Request, exc: RequestValidationError):
        detail = "; ".join(
            f"{'/'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        return _error_response(ConfigError(f"invalid request: {detail}"))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/api/validate", response_model=m.ValidateResponse)
    def validate(req: m.ValidateRequest):
        return handlers.handle_validate(req)

    @app.post("/api/fit", response_model=m.FitResponse)
    def fit(req: m.FitRequest):
        return handlers.handle_fit(req)

    @app.post("/api/metrics", response_model=m.MetricsResponse)
    def metrics(req: m.MetricsRequest):
        return handlers.handle_metrics(req)

    @app.post("/api/queue", response_model=m.QueueRunResponse)
    def queue(req: m.QueueRunRequest):
        return handlers.handle_queue(req)

    @app.post("/api/diagram", response_model=m.DiagramResponse)
    def diagram(req: m.DiagramRequest):
        return handlers.handle_diagram(req)

    @app.post("/api/report", response_model=m.ReportResponse)
    def report(req: m.ReportRequest):
        return handlers.handle_report(req)

    @app.post("/api/synth", response_model=m.SynthResponse)
    def synth(req: m.SynthRequest):
        return handlers.handle_synth(req)

    return app
