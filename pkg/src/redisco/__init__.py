"""Defect-rediscovery risk analytics.

Fit heavy-tailed count distributions to per-defect rediscovery data with
L-moments, score releases with tail risk metrics, and size support teams
via analytic and simulated queueing. The CLI (``redisco``) and the HTTP
service (``redisco.service``) wrap the same library functions.
"""

from ._version import __version__
from .config import (
    ALL_FAMILIES,
    AnalysisConfig,
    MetricRequest,
    QueueRequest,
    parse_families,
    parse_k_range,
    parse_metrics,
    parse_window,
)
from .distfit import (
    CompoundKappaModel,
    FittedModel,
    KappaParams,
    PE3Params,
    aic,
    discrete_pmf,
    fit_compound_kappa,
    fit_kappa,
    fit_model,
    fit_pe3,
    kappa_cdf,
    kappa_lmoments,
    kappa_quantile,
    model_from_doc,
    model_to_doc,
    pe3_cdf,
    pe3_quantile,
    qq_data,
)
from .errors import (
    ConfigError,
    DataError,
    DataQualityWarning,
    NumericError,
    RediscoError,
    UnstableQueueError,
)
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
    ecdf_weibull,
    kappa_feasibility,
    ratio_diagram_data,
    sample_lmoments,
    theoretical_lmoments,
)
from .pipeline import PipelineResult, analyze, report_json, run_pipeline
from .queueing import (
    EmpiricalArrivals,
    ExponentialArrivals,
    QueueResult,
    QueueScenario,
    SimConfig,
    erlang_c,
    gmk_simulate,
    m7_expected_wait,
    mmk_wq,
    staffing_sweep,
)
from .riskmetrics import (
    MetricContext,
    busy_fraction,
    capacity,
    decumulative,
    defects_affecting_customer_share,
    expected_defects_beyond,
    m1,
    m2,
    m3,
    m4,
    m5,
    m6,
    partial_expectation,
    planning_rediscoveries,
    planning_threshold,
    release_comparison,
    residual_rediscoveries,
    staffing_for_confidence,
    threshold_for_load,
)
from .synth import sample_counts, synth_csv, synth_events

__all__ = [
    "__version__",
    # errors
    "RediscoError",
    "ConfigError",
    "DataError",
    "NumericError",
    "UnstableQueueError",
    "DataQualityWarning",
    # ingest
    "EventLog",
    "Window",
    "RediscoverySample",
    "InterarrivalSample",
    "parse_events",
    "load_events",
    "window_counts",
    "interarrival_times",
    # L-moments
    "LMoments",
    "sample_lmoments",
    "theoretical_lmoments",
    "ecdf_weibull",
    "kappa_feasibility",
    "ratio_diagram_data",
    # distribution fitting
    "KappaParams",
    "PE3Params",
    "CompoundKappaModel",
    "FittedModel",
    "kappa_cdf",
    "kappa_quantile",
    "kappa_lmoments",
    "pe3_cdf",
    "pe3_quantile",
    "fit_kappa",
    "fit_pe3",
    "fit_compound_kappa",
    "fit_model",
    "discrete_pmf",
    "aic",
    "qq_data",
    "model_to_doc",
    "model_from_doc",
    # risk metrics
    "MetricContext",
    "decumulative",
    "expected_defects_beyond",
    "defects_affecting_customer_share",
    "residual_rediscoveries",
    "partial_expectation",
    "threshold_for_load",
    "planning_threshold",
    "planning_rediscoveries",
    "m1",
    "m2",
    "m3",
    "m4",
    "m5",
    "m6",
    "capacity",
    "staffing_for_confidence",
    "busy_fraction",
    "release_comparison",
    # queueing
    "ExponentialArrivals",
    "EmpiricalArrivals",
    "QueueScenario",
    "SimConfig",
    "QueueResult",
    "erlang_c",
    "mmk_wq",
    "m7_expected_wait",
    "gmk_simulate",
    "staffing_sweep",
    # configuration and pipeline
    "AnalysisConfig",
    "MetricRequest",
    "QueueRequest",
    "ALL_FAMILIES",
    "parse_window",
    "parse_k_range",
    "parse_families",
    "parse_metrics",
    "analyze",
    "run_pipeline",
    "report_json",
    "PipelineResult",
    # synthetic data
    "sample_counts",
    "synth_events",
    "synth_csv",
]
