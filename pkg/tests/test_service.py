"""HTTP layer: endpoint happy paths and the error-payload contract."""

import json
from importlib import resources

import jsonschema
import pytest
from fastapi.testclient import TestClient

from redisco._version import __version__
from redisco.distfit import FittedModel, KappaParams, model_to_doc
from redisco.ingest import Window, parse_events, window_counts
from redisco.lmoments import sample_lmoments
from redisco.service.app import create_app
from redisco.synth import synth_csv

WINDOW = {"s": 0.0, "t": 1.0}
GENERATOR = FittedModel(family="kappa", params=KappaParams(3.0, 2.0, 0.1, 0.5))
SINGLE = synth_csv(GENERATOR, 120, Window(0.0, 1.0), seed=21, release_id="r1")
SECOND = synth_csv(GENERATOR, 60, Window(0.0, 1.0), seed=22, release_id="r2")
DOUBLE = SINGLE + SECOND.split("\n", 1)[1]


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    body = client.get("/health").json()
    assert body == {"status": "ok", "version": __version__}


def test_validate_happy_path(client):
    resp = client.post("/api/validate", json={"csv_text": DOUBLE})
    assert resp.status_code == 200
    body = resp.json()
    assert body["releases"] == ["r1", "r2"]
    assert body["n_discoveries"] == 180
    assert body["n_events"] == body["n_discoveries"] + body["n_rediscoveries"]


def test_validate_empty_text(client):
    resp = client.post("/api/validate", json={"csv_text": ""})
    assert resp.status_code == 422
    body = resp.json()
    assert body["error_kind"] == "DataError"
    assert body["exit_code"] == 3
    assert "no defects in window" in body["message"]


def test_fit_happy_path(client):
    resp = client.post(
        "/api/fit", json={"csv_text": SINGLE, "window": WINDOW}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["release"] == "r1"
    assert body["n_defects"] == 120
    sample = window_counts(parse_events(SINGLE), "r1", Window(0.0, 1.0))
    lm = sample_lmoments([float(c) for c in sample.counts])
    assert body["lmoments"]["l1"] == pytest.approx(lm.lambda1)
    assert body["lmoments"]["tau3"] == pytest.approx(lm.tau3)
    families = {doc["family"] for doc in body["models"]}
    assert body["selected_family"] in families
    assert families | set(body["fit_failures"]) == {"kappa", "pe3", "compound_kappa"}


def test_fit_unknown_family(client):
    resp = client.post(
        "/api/fit",
        json={"csv_text": SINGLE, "window": WINDOW, "families": ["weibull"]},
    )
    assert resp.status_code == 400
    assert resp.json()["exit_code"] == 2


def test_fit_ambiguous_release(client):
    resp = client.post("/api/fit", json={"csv_text": DOUBLE, "window": WINDOW})
    assert resp.status_code == 400
    assert "several releases" in resp.json()["message"]
    ok = client.post(
        "/api/fit", json={"csv_text": DOUBLE, "window": WINDOW, "release": "r2"}
    )
    assert ok.status_code == 200 and ok.json()["release"] == "r2"


def test_metrics_endpoint(client):
    resp = client.post(
        "/api/metrics",
        json={
            "csv_text": SINGLE,
            "window": WINDOW,
            "customers": 1000,
            "metrics_text": "m1=10,m2=1.5,m6=0.999",
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    names = [v["name"] for v in body["values"]]
    assert names == ["m1", "m2", "m6"]
    for v in body["values"]:
        assert v["threshold"] >= 0 and v["value"] >= 0.0


def test_metrics_m2_needs_customers(client):
    resp = client.post(
        "/api/metrics",
        json={"csv_text": SINGLE, "window": WINDOW, "metrics_text": "m2=1.5"},
    )
    assert resp.status_code == 400
    assert "m2 needs" in resp.json()["message"]


def test_queue_endpoint(client):
    resp = client.post(
        "/api/queue",
        json={
            "csv_text": SINGLE,
            "window": WINDOW,
            "queue": {"mu": 400.0, "k_values": [2, 3], "n_events": 2000, "n_reps": 3},
            "seed": 5,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert [row["k"] for row in body["rows"]] == [2, 3]
    assert body["csv_text"].startswith("k,wq_gmk_days,wq_gmk_ci,wq_mmk_days,busy_percent")
    assert body["n_gaps"] > 0
    assert body["lambda_bootstrap"] > 0.0
    # a rerun with the same seed returns the identical body
    again = client.post(
        "/api/queue",
        json={
            "csv_text": SINGLE,
            "window": WINDOW,
            "queue": {"mu": 400.0, "k_values": [2, 3], "n_events": 2000, "n_reps": 3},
            "seed": 5,
        },
    )
    assert again.json() == body


def test_queue_needs_gaps(client):
    text = "\n".join(
        [
            "defect_id,release_id,kind,time",
            "a,r1,discovery,0.05",
            "a,r1,rediscovery,0.2",
            "b,r1,discovery,0.1",
            "c,r1,discovery,0.15",
            "d,r1,discovery,0.3",
        ]
    )
    resp = client.post(
        "/api/queue",
        json={
            "csv_text": text,
            "window": WINDOW,
            "queue": {"mu": 400.0, "k_values": [2], "n_events": 2000, "n_reps": 3},
        },
    )
    assert resp.status_code == 422
    assert resp.json()["error_kind"] == "DataError"


def test_diagram_endpoint(client):
    resp = client.post("/api/diagram", json={"csv_text": DOUBLE, "window": WINDOW})
    assert resp.status_code == 200
    body = resp.json()
    assert [p["label"] for p in body["points"]] == ["r1", "r2"]
    assert "sample,r1," in body["csv_text"]
    assert body["csv_text"].startswith("series,label,tau3,tau4")


def test_report_endpoint_and_schema(client):
    payload = {
        "csv_text": DOUBLE,
        "window": WINDOW,
        "customers": 1000,
        "metrics_text": "m1=10,m3=1,m6=0.999",
        "seed": 17,
    }
    resp = client.post("/api/report", json=payload)
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    schema = json.loads(
        resources.files("redisco").joinpath("report_schema.json").read_text()
    )
    jsonschema.validate(body["report"], schema)
    assert "report.json" in body["files"]
    assert "ratio_diagram.csv" in body["files"]
    again = client.post("/api/report", json=payload)
    assert again.json()["files"] == body["files"]


def test_report_stage_failure_carries_partials(client):
    resp = client.post(
        "/api/report",
        json={"csv_text": SINGLE, "window": WINDOW, "metrics_text": "m4=1e15"},
    )
    assert resp.status_code == 422
    body = resp.json()
    assert body["error_kind"] == "NumericError"
    assert body["exit_code"] == 4
    assert body["stage"] == "metrics:r1"
    assert "partial_report.json" in body["partial_files"]


def test_synth_endpoint_round_trip(client):
    doc = model_to_doc(GENERATOR)
    resp = client.post(
        "/api/synth",
        json={
            "model_doc": doc,
            "n_defects": 30,
            "window": WINDOW,
            "seed": 9,
            "release_id": "syn",
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["release_id"] == "syn"
    log = parse_events(body["csv_text"])
    assert window_counts(log, "syn", Window(0.0, 1.0)).n_defects == 30
    assert body["csv_text"] == synth_csv(GENERATOR, 30, Window(0.0, 1.0), 9, "syn")


def test_request_validation_maps_to_config_error(client):
    resp = client.post("/api/fit", json={"window": WINDOW})
    assert resp.status_code == 400
    body = resp.json()
    assert body["error_kind"] == "ConfigError"
    assert body["exit_code"] == 2
    assert body["message"].startswith("invalid request")
    bad_window = client.post(
        "/api/fit", json={"csv_text": SINGLE, "window": {"s": -1.0, "t": 1.0}}
    )
    assert bad_window.status_code == 400
