"""Request and response shapes for the HTTP endpoints.

Event logs travel as CSV text inside the request body, which keeps the
service stateless: a request is a pure function of its payload, and file
handling stays on the client side.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..config import ALL_FAMILIES, DEFAULT_METRICS

_FAMILY_DEFAULT = list(ALL_FAMILIES)


class WindowModel(BaseModel):
    s: float = Field(ge=0.0)
    t: float


class MetricSpec(BaseModel):
    name: str
    argument: float


class QueueSpec(BaseModel):
    mu: float = Field(gt=0.0)
    k_values: list[int] = Field(min_length=1)
    n_events: int = 200_000
    n_reps: int = 30


class ValidateRequest(BaseModel):
    csv_text: str


class ValidateResponse(BaseModel):
    releases: list[str]
    n_events: int
    n_discoveries: int
    n_rediscoveries: int


class FitRequest(BaseModel):
    csv_text: str
    window: WindowModel
    release: Optional[str] = None
    families: list[str] = Field(default_factory=lambda: list(_FAMILY_DEFAULT))


class FitResponse(BaseModel):
    release: str
    n_defects: int
    total_rediscoveries: int
    lmoments: dict
    models: list[dict]
    fit_failures: dict[str, str]
    selected_family: str


class MetricsRequest(FitRequest):
    customers: Optional[int] = None
    metrics_text: str = DEFAULT_METRICS


class MetricValue(BaseModel):
    name: str
    argument: float
    threshold: int
    value: float


class MetricsResponse(BaseModel):
    release: str
    selected_family: str
    values: list[MetricValue]


class QueueRunRequest(BaseModel):
    csv_text: str
    window: WindowModel
    queue: QueueSpec
    release: Optional[str] = None
    seed: int = 0


class QueueRow(BaseModel):
    k: int
    wq_gmk_days: Optional[float]
    wq_gmk_ci: Optional[float]
    wq_mmk_days: Optional[float]
    busy_percent: float


class QueueRunResponse(BaseModel):
    release: str
    mu: float
    lambda_bootstrap: float
    lambda_window: float
    n_gaps: int
    rows: list[QueueRow]
    csv_text: str


class DiagramRequest(BaseModel):
    csv_text: str
    window: WindowModel
    release: Optional[str] = None


class DiagramPoint(BaseModel):
    label: str
    tau3: float
    tau4: float


class DiagramResponse(BaseModel):
    points: list[DiagramPoint]
    csv_text: str


class ReportRequest(BaseModel):
    csv_text: str
    window: WindowModel
    input_label: str = "<inline>"
    release: Optional[str] = None
    customers: Optional[int] = None
    families: list[str] = Field(default_factory=lambda: list(_FAMILY_DEFAULT))
    metrics_text: str = DEFAULT_METRICS
    queue: Optional[QueueSpec] = None
    seed: int = 0


class ReportResponse(BaseModel):
    status: Literal["ok"]
    report: dict
    files: dict[str, str]


class SynthRequest(BaseModel):
    model_doc: dict
    n_defects: int = Field(ge=0)
    window: WindowModel
    seed: int = 0
    release_id: str = "synthetic"


class SynthResponse(BaseModel):
    release_id: str
    n_defects: int
    csv_text: str


class ErrorPayload(BaseModel):
    """Uniform error body; exit_code is what the CLI should exit with."""

    error_kind: str
    message: str
    exit_code: int
    stage: Optional[str] = None
    partial_files: Optional[dict[str, str]] = None
