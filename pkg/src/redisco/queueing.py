"""Customer waiting-time analysis for rediscovery streams.

Two routes to the mean queueing delay of a k-person support team:

* analytic M/M/k (Poisson arrivals, exponential service): Erlang C via the
  numerically stable Erlang-B recurrence, no factorials;
* simulated G/M/k: arrivals drawn from an empirical interarrival sample (or
  exponential), service exponential, waits computed with the
  Kiefer-Wolfowitz workload-vector recursion. Replicated with independent
  seeds; the mean wait carries a Student-t confidence interval.

Rates are per year; reported waits are in working days. The total expected
customer delay (wait plus the fix itself) adds one mean service time,
working_days_per_year / mu, to the queueing delay.

The simulation kernel is compiled with numba when available and falls back
to pure Python (identical arithmetic) otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.stats import t as student_t

from .errors import ConfigError, DataQualityWarning, UnstableQueueError

__all__ = [
    "ExponentialArrivals",
    "EmpiricalArrivals",
    "ArrivalProcess",
    "QueueScenario",
    "SimConfig",
    "QueueResult",
    "WORKING_DAYS_PER_YEAR",
    "erlang_c",
    "mmk_wq",
    "m7_expected_wait",
    "gmk_simulate",
    "SweepRow",
    "staffing_sweep",
    "sweep_to_csv",
]

WORKING_DAYS_PER_YEAR = 250.0


@dataclass(frozen=True)
class ExponentialArrivals:
    """Poisson arrival stream at `rate` events per year."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0.0:
            raise ConfigError(f"arrival rate must be positive, got {self.rate!r}")

    def draw_gaps(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size=n)


@dataclass(frozen=True)
class EmpiricalArrivals:
    """Bootstrap arrival stream resampling observed interarrival gaps (years)."""

    gaps: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.gaps) == 0:
            raise ConfigError("empirical arrivals need at least one gap")
        if any(not g > 0.0 for g in self.gaps):
            raise ConfigError("interarrival gaps must all be positive")

    @property
    def rate(self) -> float:
        return len(self.gaps) / math.fsum(self.gaps)

    def draw_gaps(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(np.asarray(self.gaps, dtype=float), size=n, replace=True)


ArrivalProcess = Union[ExponentialArrivals, EmpiricalArrivals]


@dataclass(frozen=True)
class QueueScenario:
    """One queue configuration: arrival stream, per-person service rate, team size."""

    arrivals: ArrivalProcess
    mu: float
    k: int

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise ConfigError(f"mu must be positive, got {self.mu!r}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k!r}")


@dataclass(frozen=True)
class SimConfig:
    n_events: int = 200_000
    n_reps: int = 30
    warmup_fraction: float = 0.1
    seed: int = 0
    working_days_per_year: float = WORKING_DAYS_PER_YEAR

    def __post_init__(self) -> None:
        if self.n_events < 100:
            raise ConfigError(f"n_events must be >= 100, got {self.n_events!r}")
        if self.n_reps < 2:
            raise ConfigError(f"n_reps must be >= 2, got {self.n_reps!r}")
        if not (0.0 <= self.warmup_fraction <= 0.9):
            raise ConfigError(
                f"warmup_fraction must be in [0, 0.9], got {self.warmup_fraction!r}"
            )
        if not self.working_days_per_year > 0.0:
            raise ConfigError("working_days_per_year must be positive")


@dataclass(frozen=True)
class QueueResult:
    """Mean queueing delay, either analytic or simulated.

    ``method`` is "analytic_mmk" or "simulated_gmk". Analytic results have a
    zero confidence interval, a NaN Little's-law ratio, and no replication
    means, since there is nothing to replicate.
    """

    wq_days: float
    ci_half_width_days: float
    m7_days: float
    busy_percent: float
    little_ratio: float
    replication_means_days: tuple[float, ...]
    method: str

    def __post_init__(self) -> None:
        if self.method not in ("analytic_mmk", "simulated_gmk"):
            raise ConfigError(f"unknown queue method {self.method!r}")


# ---------------------------------------------------------------------------
# Analytic M/M/k
# ---------------------------------------------------------------------------

def erlang_c(lam: float, mu: float, k: int) -> float:
    """Probability an arrival must wait in an M/M/k queue.

    Uses the Erlang-B recurrence B(n) = a B(n-1) / (n + a B(n-1)) with
    a = lam/mu, then C = B / (1 - rho (1 - B)).
    """
    if not lam > 0.0:
        raise ConfigError(f"lam must be positive, got {lam!r}")
    if not mu > 0.0:
        raise ConfigError(f"mu must be positive, got {mu!r}")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k!r}")
    if lam >= k * mu:
        raise UnstableQueueError(
            f"no steady state: lam={lam!r} >= k*mu={k * mu!r}"
        )
    a = lam / mu
    b = 1.0
    for n in range(1, k + 1):
        b = a * b / (n + a * b)
    rho = lam / (k * mu)
    return b / (1.0 - rho * (1.0 - b))


def mmk_wq(
    lam: float, mu: float, k: int, working_days_per_year: float = WORKING_DAYS_PER_YEAR
) -> QueueResult:
    """Mean M/M/k queueing delay in working days: C / (k mu - lam)."""
    c = erlang_c(lam, mu, k)
    wq_days = c / (k * mu - lam) * working_days_per_year
    return QueueResult(
        wq_days=wq_days,
        ci_half_width_days=0.0,
        m7_days=wq_days + working_days_per_year / mu,
        busy_percent=100.0 * lam / (k * mu),
        little_ratio=float("nan"),
        replication_means_days=(),
        method="analytic_mmk",
    )


def m7_expected_wait(
    wq: QueueResult | float, mu: float, working_days_per_year: float = WORKING_DAYS_PER_YEAR
) -> float:
    """Total expected customer delay: queueing days plus one mean service time."""
    wq_days = wq.wq_days if isinstance(wq, QueueResult) else float(wq)
    if wq_days < 0.0 or not math.isfinite(wq_days):
        raise ConfigError(f"queueing delay must be finite and >= 0, got {wq_days!r}")
    if not mu > 0.0:
        raise ConfigError(f"mu must be positive, got {mu!r}")
    return wq_days + working_days_per_year / mu


# ---------------------------------------------------------------------------
# Kiefer-Wolfowitz waits kernel
# ---------------------------------------------------------------------------

def _kw_waits_py(taus: np.ndarray, services: np.ndarray, k: int) -> np.ndarray:
    """Workload-vector recursion: busy[] holds the k sorted server backlogs."""
    n = taus.shape[0]
    busy = np.zeros(k)
    waits = np.empty(n)
    for i in range(n):
        tau = taus[i]
        for s in range(k):
            v = busy[s] - tau
            busy[s] = v if v > 0.0 else 0.0
        w = busy[0]
        waits[i] = w
        done = w + services[i]
        busy[0] = done
        s = 0
        while s + 1 < k and busy[s + 1] < busy[s]:
            busy[s], busy[s + 1] = busy[s + 1], busy[s]
            s += 1
    return waits


try:
    from numba import njit

    _kw_waits = njit(cache=True)(_kw_waits_py)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _kw_waits = _kw_waits_py
    HAVE_NUMBA = False


def _little_ratio(
    taus: np.ndarray, waits: np.ndarray, warmup: int
) -> float:
    """Little's-law consistency check: time-average queue length over
    lambda * mean wait, both measured on the post-warmup window.

    A healthy stationary run gives a ratio near 1.
    """
    arrivals = np.cumsum(taus)
    t0 = arrivals[warmup] if warmup > 0 else 0.0
    t1 = arrivals[-1]
    if not t1 > t0:
        return math.nan
    departures_from_queue = arrivals + waits
    overlap = np.clip(
        np.minimum(departures_from_queue, t1) - np.maximum(arrivals, t0), 0.0, None
    )
    l_q = float(np.sum(overlap)) / (t1 - t0)
    post = waits[warmup:]
    lam_window = post.size / (t1 - t0)
    mean_wait = float(np.mean(post))
    if mean_wait <= 0.0:
        return math.nan
    return l_q / (lam_window * mean_wait)


def gmk_simulate(scenario: QueueScenario, config: SimConfig = SimConfig()) -> QueueResult:
    """Replicated G/M/k wait simulation.

    Each replication draws its own interarrival and service streams from an
    independently spawned generator, runs the Kiefer-Wolfowitz recursion,
    and discards the warmup fraction of events. The confidence interval is
    the two-sided 95% Student-t half width over replication means. Raises
    UnstableQueueError when the arrival rate meets or exceeds k * mu.
    """
    lam = scenario.arrivals.rate
    if lam >= scenario.k * scenario.mu:
        raise UnstableQueueError(
            f"no steady state: arrival rate {lam!r} >= k*mu={scenario.k * scenario.mu!r}"
        )
    warmup = int(config.n_events * config.warmup_fraction)
    children = np.random.SeedSequence(config.seed).spawn(config.n_reps)
    means_years = np.empty(config.n_reps)
    little = np.empty(config.n_reps)
    for r, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        taus = scenario.arrivals.draw_gaps(rng, config.n_events)
        services = rng.exponential(1.0 / scenario.mu, size=config.n_events)
        waits = _kw_waits(taus, services, scenario.k)
        means_years[r] = float(np.mean(waits[warmup:]))
        little[r] = _little_ratio(taus, waits, warmup)
    days = config.working_days_per_year
    rep_means_days = means_years * days
    wq_days = float(np.mean(rep_means_days))
    spread = float(np.std(rep_means_days, ddof=1))
    half = float(
        student_t.ppf(0.975, config.n_reps - 1) * spread / math.sqrt(config.n_reps)
    )
    finite_ratios = little[np.isfinite(little)]
    # an empty-queue run has no ratio to check; that is not a quality problem
    little_mean = float(np.mean(finite_ratios)) if finite_ratios.size else math.nan
    if finite_ratios.size and not (0.95 <= little_mean <= 1.05):
        warnings.warn(
            f"Little's-law ratio {little_mean:.4f} is off by more than 5%; "
            "the run may be too short or not stationary",
            DataQualityWarning,
            stacklevel=2,
        )
    return QueueResult(
        wq_days=wq_days,
        ci_half_width_days=half,
        m7_days=m7_expected_wait(wq_days, scenario.mu, days),
        busy_percent=100.0 * lam / (scenario.k * scenario.mu),
        little_ratio=little_mean,
        replication_means_days=tuple(float(v) for v in rep_means_days),
        method="simulated_gmk",
    )


# ---------------------------------------------------------------------------
# Staffing sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    k: int
    wq_gmk_days: float | None
    wq_gmk_ci: float | None
    wq_mmk_days: float | None
    busy_percent: float


def staffing_sweep(
    arrivals: ArrivalProcess,
    mu: float,
    k_range: Sequence[int],
    config: SimConfig = SimConfig(),
) -> list[SweepRow]:
    """Simulated and analytic waits for each candidate team size.

    Each k simulates with its own deterministic seed derived from
    (config.seed, k), so adding or removing candidates does not perturb the
    others. Team sizes without a steady state get empty wait columns.
    """
    if len(k_range) == 0:
        raise ConfigError("k_range must not be empty")
    rows: list[SweepRow] = []
    lam = arrivals.rate
    for k in sorted(set(int(k) for k in k_range)):
        if k < 1:
            raise ConfigError(f"k must be >= 1, got {k!r}")
        busy = 100.0 * lam / (k * mu)
        if lam >= k * mu:
            rows.append(SweepRow(k, None, None, None, busy))
            continue
        per_k = SimConfig(
            n_events=config.n_events,
            n_reps=config.n_reps,
            warmup_fraction=config.warmup_fraction,
            seed=np.random.SeedSequence((config.seed, k)).generate_state(1)[0],
            working_days_per_year=config.working_days_per_year,
        )
        sim = gmk_simulate(QueueScenario(arrivals, mu, k), per_k)
        rows.append(
            SweepRow(
                k=k,
                wq_gmk_days=sim.wq_days,
                wq_gmk_ci=sim.ci_half_width_days,
                wq_mmk_days=mmk_wq(lam, mu, k, config.working_days_per_year).wq_days,
                busy_percent=busy,
            )
        )
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    """CSV rendering with empty cells for team sizes without a steady state."""
    out = ["k,wq_gmk_days,wq_gmk_ci,wq_mmk_days,busy_percent"]
    for r in rows:
        cells = [
            str(r.k),
            "" if r.wq_gmk_days is None else repr(r.wq_gmk_days),
            "" if r.wq_gmk_ci is None else repr(r.wq_gmk_ci),
            "" if r.wq_mmk_days is None else repr(r.wq_mmk_days),
            repr(r.busy_percent),
        ]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"
