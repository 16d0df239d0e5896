"""Command-line front end.

Every subcommand builds a request payload and sends it through an HTTP
client: against a remote service when --server is given, otherwise against
an in-process instance of the same app. File handling stays on this side of
the wire: inputs are read here and posted as text, and report/CSV payloads
returned by the service are written here, so a remote server never touches
the local filesystem.

Exit codes: 0 success, 2 configuration errors, 3 data errors, 4 numeric
failures. Argument-syntax problems also exit 2 via argparse.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from ._version import __version__
from .config import (
    DEFAULT_METRICS,
    OUT_DIR_ENV_VAR,
    parse_families,
    parse_k_range,
    parse_metrics,
    parse_window,
    resolve_out_dir,
)
from .errors import ConfigError, DataError, RediscoError

__all__ = ["main", "build_parser", "client_factory"]


def _default_client_factory(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # fastapi's own shim import warns about its starlette test client;
        # not actionable here and pure noise on the CLI's stderr
        warnings.filterwarnings(
            "ignore", message="Using `httpx` with `starlette.testclient` is deprecated"
        )
        from fastapi.testclient import TestClient
    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


#: Replaceable seam: tests and embedders can swap the transport.
client_factory = _default_client_factory


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redisco",
        description="Rediscovery risk analysis: distribution fitting, "
        "risk metrics, and support-queue waiting times from defect event logs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, input_required: bool = True) -> None:
        p.add_argument("--input", required=input_required, help="event CSV path")
        p.add_argument("--release", default=None, help="release id filter")
        p.add_argument("--window", default="0:1", help="observation window s:t in years")
        p.add_argument("--seed", type=int, default=0, help="rng seed")
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_DIR_ENV_VAR} or .)")
        p.add_argument("--server", default=None, help="base URL of a running service")

    p = sub.add_parser("validate", help="parse and sanity-check an event log")
    common(p)

    p = sub.add_parser("fit", help="fit model families and report AICs")
    common(p)
    p.add_argument("--families", default=None, help="comma list: kappa,pe3,compound_kappa")

    p = sub.add_parser("metrics", help="fit, select by AIC, and evaluate risk metrics")
    common(p)
    p.add_argument("--families", default=None)
    p.add_argument("--customers", type=int, default=None, help="customer-base size")
    p.add_argument("--metrics", default=DEFAULT_METRICS, help="e.g. m1=10,m4=1000,m6=0.999")

    p = sub.add_parser("queue", help="waiting-time sweep over team sizes")
    common(p)
    p.add_argument("--mu", type=float, required=True, help="service rate per person per year")
    p.add_argument("--k-range", default="8:12", help="team sizes lo:hi (inclusive)")
    p.add_argument("--sim-events", type=int, default=200_000)
    p.add_argument("--sim-reps", type=int, default=30)

    p = sub.add_parser("diagram", help="L-moment ratio diagram data")
    common(p)

    p = sub.add_parser("report", help="full pipeline: fit, metrics, queue, files")
    common(p)
    p.add_argument("--families", default=None)
    p.add_argument("--customers", type=int, default=None)
    p.add_argument("--metrics", default=DEFAULT_METRICS)
    p.add_argument("--mu", type=float, default=None, help="enable queue analysis")
    p.add_argument("--k-range", default="8:12")
    p.add_argument("--sim-events", type=int, default=200_000)
    p.add_argument("--sim-reps", type=int, default=30)

    p = sub.add_parser("synth", help="generate a synthetic event log from a model doc")
    common(p, input_required=False)
    p.add_argument("--params", required=True, help="fitted-model JSON document path")
    p.add_argument("--n", type=int, required=True, help="number of defects")
    p.add_argument("--release-id", default="synthetic")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _read_input(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8-sig", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _window_payload(text: str) -> dict:
    w = parse_window(text)
    return {"s": w.s, "t": w.t}


def _families_payload(text: str | None) -> list | None:
    return None if text is None else list(parse_families(text))


def _queue_payload(args) -> dict:
    return {
        "mu": args.mu,
        "k_values": list(parse_k_range(args.k_range)),
        "n_events": args.sim_events,
        "n_reps": args.sim_reps,
    }


def _emit(doc) -> None:
    print(json.dumps(doc, sort_keys=True, indent=2))


def _write_files(out_dir: str, files: dict) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(files[name])
        paths.append(path)
    return paths


def _post(client, path: str, payload: dict, out_dir: str | None = None) -> dict:
    """POST and return the body; on error, surface it and exit with its code.

    When the error body carries partial files (a failed report run) they are
    written under <out>/partial/ before exiting.
    """
    response = client.post(path, json=payload)
    body = response.json()
    if response.status_code == 200:
        return body
    message = body.get("message") or json.dumps(body, sort_keys=True)
    kind = body.get("error_kind", "error")
    stage = body.get("stage")
    where = f" at stage {stage!r}" if stage else ""
    print(f"{kind}{where}: {message}", file=sys.stderr)
    partial = body.get("partial_files")
    if partial and out_dir:
        manifest = {
            "stage": stage,
            "error_kind": kind,
            "message": message,
            "exit_code": int(body.get("exit_code", 2)),
        }
        files = dict(partial)
        files["failure_manifest.json"] = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
        paths = _write_files(os.path.join(out_dir, "partial"), files)
        print(f"partial outputs written to {os.path.join(out_dir, 'partial')} "
              f"({len(paths)} files)", file=sys.stderr)
    sys.exit(int(body.get("exit_code", 2)))


def _cmd_validate(client, args) -> None:
    body = _post(client, "/api/validate", {"csv_text": _read_input(args.input)})
    _emit(body)


def _cmd_fit(client, args) -> None:
    payload = {
        "csv_text": _read_input(args.input),
        "window": _window_payload(args.window),
        "release": args.release,
    }
    families = _families_payload(args.families)
    if families is not None:
        payload["families"] = families
    _emit(_post(client, "/api/fit", payload))


def _cmd_metrics(client, args) -> None:
    parse_metrics(args.metrics)  # fail fast with a readable message
    payload = {
        "csv_text": _read_input(args.input),
        "window": _window_payload(args.window),
        "release": args.release,
        "customers": args.customers,
        "metrics_text": args.metrics,
    }
    families = _families_payload(args.families)
    if families is not None:
        payload["families"] = families
    _emit(_post(client, "/api/metrics", payload))


def _cmd_queue(client, args) -> None:
    payload = {
        "csv_text": _read_input(args.input),
        "window": _window_payload(args.window),
        "release": args.release,
        "seed": args.seed,
        "queue": _queue_payload(args),
    }
    body = _post(client, "/api/queue", payload)
    out_dir = resolve_out_dir(args.out)
    csv_text = body.pop("csv_text")
    paths = _write_files(out_dir, {f"{body['release']}_queue_sweep.csv": csv_text})
    body["written"] = paths
    _emit(body)


def _cmd_diagram(client, args) -> None:
    payload = {
        "csv_text": _read_input(args.input),
        "window": _window_payload(args.window),
        "release": args.release,
    }
    body = _post(client, "/api/diagram", payload)
    out_dir = resolve_out_dir(args.out)
    csv_text = body.pop("csv_text")
    body["written"] = _write_files(out_dir, {"ratio_diagram.csv": csv_text})
    _emit(body)


def _cmd_report(client, args) -> None:
    parse_metrics(args.metrics)
    out_dir = resolve_out_dir(args.out)
    payload = {
        "csv_text": _read_input(args.input),
        "input_label": args.input,
        "window": _window_payload(args.window),
        "release": args.release,
        "customers": args.customers,
        "metrics_text": args.metrics,
        "seed": args.seed,
        "queue": _queue_payload(args) if args.mu is not None else None,
    }
    families = _families_payload(args.families)
    if families is not None:
        payload["families"] = families
    body = _post(client, "/api/report", payload, out_dir=out_dir)
    paths = _write_files(out_dir, body["files"])
    releases = body["report"].get("releases", [])
    _emit(
        {
            "out_dir": out_dir,
            "written": paths,
            "releases": [
                {"release_id": r["release_id"], "selected_family": r["selected_family"]}
                for r in releases
            ],
        }
    )


def _cmd_synth(client, args) -> None:
    try:
        with open(args.params, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {args.params}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.params} is not valid JSON: {exc}") from exc
    payload = {
        "model_doc": doc,
        "n_defects": args.n,
        "window": _window_payload(args.window),
        "seed": args.seed,
        "release_id": args.release_id,
    }
    body = _post(client, "/api/synth", payload)
    out_dir = resolve_out_dir(args.out)
    name = f"{body['release_id']}_events.csv"
    paths = _write_files(out_dir, {name: body["csv_text"]})
    _emit({"release_id": body["release_id"], "n_defects": body["n_defects"], "written": paths})


def _cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)


_COMMANDS = {
    "validate": _cmd_validate,
    "fit": _cmd_fit,
    "metrics": _cmd_metrics,
    "queue": _cmd_queue,
    "diagram": _cmd_diagram,
    "report": _cmd_report,
    "synth": _cmd_synth,
}


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            _cmd_serve(args)
            return 0
        if args.command == "synth" and args.n < 0:
            raise ConfigError(f"--n must be >= 0, got {args.n}")
        client = client_factory(args.server)
        try:
            _COMMANDS[args.command](client, args)
        finally:
            close = getattr(client, "close", None)
            if callable(close):
                close()
    except RediscoError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
