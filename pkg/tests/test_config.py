"""Flag parsing and AnalysisConfig validation."""

import pytest

from redisco.config import (
    ALL_FAMILIES,
    DEFAULT_METRICS,
    OUT_DIR_ENV_VAR,
    AnalysisConfig,
    MetricRequest,
    QueueRequest,
    parse_families,
    parse_k_range,
    parse_metrics,
    parse_window,
    resolve_out_dir,
)
from redisco.errors import ConfigError
from redisco.ingest import Window


def test_parse_window():
    assert parse_window("0:1") == Window(0.0, 1.0)
    assert parse_window("1:2.5") == Window(1.0, 2.5)
    for bad in ("1", "1:2:3", "a:b", "2:1", "1:1"):
        with pytest.raises(ConfigError):
            parse_window(bad)


def test_parse_k_range():
    assert parse_k_range("8:12") == (8, 9, 10, 11, 12)
    assert parse_k_range("9") == (9,)
    for bad in ("0:4", "5:3", "1:2:3", "x", ""):
        with pytest.raises(ConfigError):
            parse_k_range(bad)


def test_parse_families():
    assert parse_families("kappa,pe3") == ("kappa", "pe3")
    assert parse_families(" compound_kappa ") == ("compound_kappa",)
    with pytest.raises(ConfigError):
        parse_families(" , ")
    # unknown names are caught at config construction, not at parse time
    cfg_kwargs = dict(input_path="x.csv", window=Window(0.0, 1.0))
    with pytest.raises(ConfigError, match="unknown families"):
        AnalysisConfig(families=parse_families("weibull"), **cfg_kwargs)
    with pytest.raises(ConfigError, match="must not repeat"):
        AnalysisConfig(families=("kappa", "kappa"), **cfg_kwargs)


def test_parse_metrics():
    reqs = parse_metrics("m1=10, m6=0.999")
    assert reqs == (MetricRequest("m1", 10.0), MetricRequest("m6", 0.999))
    assert parse_metrics(DEFAULT_METRICS)  # the default string always parses
    for bad in ("m1", "m1=x", "", "m9=1"):
        with pytest.raises(ConfigError):
            parse_metrics(bad)


@pytest.mark.parametrize(
    "name,argument,ok",
    [
        ("m1", 10.0, True),
        ("m1", 2.5, False),
        ("m1", -1.0, False),
        ("m2", 1.5, True),
        ("m2", 100.0, True),
        ("m2", 0.0, False),
        ("m2", 100.5, False),
        ("m3", 0.0, True),
        ("m4", 0.0, True),
        ("m4", -0.5, False),
        ("m5", 1245.0, True),
        ("m6", 0.999, True),
        ("m6", 1.0, False),
        ("m6", 0.0, False),
    ],
)
def test_metric_request_domains(name, argument, ok):
    if ok:
        MetricRequest(name, argument)
    else:
        with pytest.raises(ConfigError):
            MetricRequest(name, argument)


def test_queue_request_validation():
    QueueRequest(mu=125.0, k_values=(8, 9))
    with pytest.raises(ConfigError):
        QueueRequest(mu=0.0, k_values=(8,))
    with pytest.raises(ConfigError):
        QueueRequest(mu=125.0, k_values=())
    with pytest.raises(ConfigError):
        QueueRequest(mu=125.0, k_values=(0, 3))


def test_analysis_config_validation():
    base = dict(input_path="events.csv", window=Window(0.0, 1.0))
    cfg = AnalysisConfig(**base)
    assert cfg.families == ALL_FAMILIES
    assert cfg.metrics == parse_metrics(DEFAULT_METRICS)
    with pytest.raises(ConfigError):
        AnalysisConfig(input_path="", window=Window(0.0, 1.0))
    with pytest.raises(ConfigError):
        AnalysisConfig(families=(), **base)
    with pytest.raises(ConfigError):
        AnalysisConfig(customers=0, **base)
    with pytest.raises(ConfigError, match="m2 needs --customers"):
        AnalysisConfig(metrics=parse_metrics("m2=1.5"), **base)
    AnalysisConfig(metrics=parse_metrics("m2=1.5"), customers=1000, **base)


def test_resolve_out_dir(monkeypatch):
    monkeypatch.delenv(OUT_DIR_ENV_VAR, raising=False)
    assert resolve_out_dir("reports") == "reports"
    assert resolve_out_dir(None) == "."
    monkeypatch.setenv(OUT_DIR_ENV_VAR, "/tmp/redisco-out")
    assert resolve_out_dir(None) == "/tmp/redisco-out"
    assert resolve_out_dir("flag-wins") == "flag-wins"
    monkeypatch.setenv(OUT_DIR_ENV_VAR, "  ")
    assert resolve_out_dir(None) == "."
