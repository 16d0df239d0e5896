"""Analysis configuration: the validated bridge between flags and pipeline.

Flag-style strings (window "0:1", k-range "8:12", metric list
"m1=10,m6=0.999") parse into one frozen AnalysisConfig. Everything the
pipeline does is a pure function of this object plus the input bytes, which
is what makes rerunning a report reproducible.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .distfit import FAMILY_COMPOUND, FAMILY_KAPPA, FAMILY_PE3
from .errors import ConfigError
from .ingest import Window

__all__ = [
    "ALL_FAMILIES",
    "OUT_DIR_ENV_VAR",
    "DEFAULT_METRICS",
    "MetricRequest",
    "QueueRequest",
    "AnalysisConfig",
    "parse_window",
    "parse_k_range",
    "parse_families",
    "parse_metrics",
    "resolve_out_dir",
]

ALL_FAMILIES = (FAMILY_KAPPA, FAMILY_PE3, FAMILY_COMPOUND)
OUT_DIR_ENV_VAR = "REDISCO_OUT"
DEFAULT_METRICS = "m1=10,m3=1,m6=0.999"

# metric name -> (argument meaning, validator)
_METRIC_ARGS = {
    "m1": "count threshold d (integer >= 0)",
    "m2": "customer share x in percent, 0 < x <= 100",
    "m3": "count threshold d (integer >= 0)",
    "m4": "load threshold L >= 0",
    "m5": "load threshold L >= 0",
    "m6": "confidence alpha in (0, 1)",
}


@dataclass(frozen=True)
class MetricRequest:
    """One requested metric with its argument, e.g. name="m6", argument=0.999."""

    name: str
    argument: float

    def __post_init__(self) -> None:
        if self.name not in _METRIC_ARGS:
            raise ConfigError(
                f"unknown metric {self.name!r}; expected one of {sorted(_METRIC_ARGS)}"
            )
        a = self.argument
        ok = {
            "m1": lambda: a >= 0 and float(a).is_integer(),
            "m2": lambda: 0.0 < a <= 100.0,
            "m3": lambda: a >= 0 and float(a).is_integer(),
            "m4": lambda: a >= 0.0,
            "m5": lambda: a >= 0.0,
            "m6": lambda: 0.0 < a < 1.0,
        }[self.name]()
        if not ok:
            raise ConfigError(
                f"bad argument {a!r} for {self.name}: expected {_METRIC_ARGS[self.name]}"
            )


@dataclass(frozen=True)
class QueueRequest:
    """Waiting-time analysis request: service rate, team sizes, sim effort."""

    mu: float
    k_values: tuple[int, ...]
    n_events: int = 200_000
    n_reps: int = 30

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise ConfigError(f"mu must be positive, got {self.mu!r}")
        if not self.k_values:
            raise ConfigError("k_values must not be empty")
        if any(k < 1 for k in self.k_values):
            raise ConfigError("every k must be >= 1")


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything one pipeline run depends on, apart from the input bytes."""

    input_path: str
    window: Window
    release: str | None = None
    customers: int | None = None
    families: tuple[str, ...] = ALL_FAMILIES
    metrics: tuple[MetricRequest, ...] = field(
        default_factory=lambda: parse_metrics(DEFAULT_METRICS)
    )
    queue: QueueRequest | None = None
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if not self.input_path:
            raise ConfigError("input_path must be non-empty")
        if not self.families:
            raise ConfigError("at least one model family is required")
        unknown = [f for f in self.families if f not in ALL_FAMILIES]
        if unknown:
            raise ConfigError(
                f"unknown families {unknown!r}; expected a subset of {list(ALL_FAMILIES)}"
            )
        if len(set(self.families)) != len(self.families):
            raise ConfigError("families must not repeat")
        if self.customers is not None and self.customers <= 0:
            raise ConfigError(f"customers must be positive, got {self.customers!r}")
        if any(m.name == "m2" for m in self.metrics) and self.customers is None:
            raise ConfigError("metric m2 needs --customers (customer-base size)")


def parse_window(text: str) -> Window:
    """Parse "s:t" in years, e.g. "0:1" or "1:2.5"."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"window must look like s:t, got {text!r}")
    try:
        s, t = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"window bounds must be numbers, got {text!r}") from None
    try:
        return Window(s, t)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc


def parse_k_range(text: str) -> tuple[int, ...]:
    """Parse "8:12" (inclusive) or a single "9" into candidate team sizes."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError(text)
    except ValueError:
        raise ConfigError(f"k-range must look like lo:hi or k, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise ConfigError(f"k-range needs 1 <= lo <= hi, got {text!r}")
    return tuple(range(lo, hi + 1))


def parse_families(text: str) -> tuple[str, ...]:
    """Parse a comma list of family names, preserving order."""
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    if not names:
        raise ConfigError("families list is empty")
    return names


def parse_metrics(text: str) -> tuple[MetricRequest, ...]:
    """Parse "m1=10,m6=0.999" into validated metric requests."""
    requests: list[MetricRequest] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, eq, arg = part.partition("=")
        if not eq:
            raise ConfigError(f"metric request {part!r} must look like name=argument")
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"metric argument in {part!r} is not a number") from None
        requests.append(MetricRequest(name.strip(), value))
    if not requests:
        raise ConfigError("metrics list is empty")
    return tuple(requests)


def resolve_out_dir(flag_value: str | None) -> str:
    """Output directory: the --out flag, else the environment, else cwd."""
    if flag_value:
        return flag_value
    env = os.environ.get(OUT_DIR_ENV_VAR, "").strip()
    return env or "."
