"""Release risk metrics computed from a discretized rediscovery-count model.

All metrics operate on a MetricContext, which freezes the fitted model onto
an integer grid: pmf values p(j), the cdf F(j), and the running partial
expectation sum(i * p(i), i <= j). The grid extends far enough into the tail
that the unresolved remainder is below 1e-9 of the total mass (or until the
hard cap, in which case the context is flagged and a warning is emitted).

With N the number of tracked defects and D the rediscovery count of a
single defect (each rediscovery being one customer report), the metrics are:

* expected number of defects rediscovered more than d times, N * P(D > d);
* the same, with d chosen as a percentage of the customer base, so the
  result counts defects whose rediscoveries touch more than x% of customers;
* expected residual rediscoveries at or past a count threshold d,
  N * sum(j * p(j), j >= d);
* the probability that a defect still lies beyond / within the smallest
  threshold d whose cumulative expected rediscoveries reach a target load;
* expected rediscoveries a support organization should plan for at
  confidence alpha, N * sum(j * p(j), 1 <= j <= d_alpha) with d_alpha the
  smallest d where F(d) >= alpha;

plus capacity and staffing arithmetic built on those quantities. The short
names m1..m6 are kept as aliases because reports and the CLI refer to the
metrics by number.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .distfit import FittedModel, discrete_pmf
from .errors import ConfigError, DataError, DataQualityWarning, NumericError

__all__ = [
    "MetricContext",
    "TAIL_MASS_TOLERANCE",
    "TAIL_GRID_CAP",
    "decumulative",
    "expected_defects_beyond",
    "PercentileMetric",
    "defects_affecting_customer_share",
    "residual_rediscoveries",
    "threshold_for_load",
    "load_threshold_exceedance",
    "load_threshold_coverage",
    "planning_threshold",
    "planning_rediscoveries",
    "partial_expectation",
    "m1",
    "m2",
    "m3",
    "m4",
    "m5",
    "m6",
    "capacity",
    "staffing_from_planning_value",
    "staffing_for_confidence",
    "busy_fraction",
    "ReleaseComparisonRow",
    "release_comparison",
]

TAIL_MASS_TOLERANCE = 1e-9
TAIL_GRID_CAP = 10_000_000


@dataclass(eq=False)
class MetricContext:
    """Integer-grid view of one release's rediscovery-count distribution.

    cdf[j] and weighted_cumsum[j] cover j = 0 .. grid_max; weighted_cumsum
    is sum(i * pmf[i], i <= j), so its last entry approximates E[D].
    n_defects scales every metric; customers is the installed-base size and
    is only needed by the percentile metric.
    """

    n_defects: int
    pmf: np.ndarray
    cdf: np.ndarray
    weighted_cumsum: np.ndarray
    customers: int | None = None
    model: FittedModel | None = None
    tail_capped: bool = False

    def __post_init__(self) -> None:
        if self.n_defects <= 0:
            raise ConfigError(f"n_defects must be positive, got {self.n_defects!r}")
        if self.customers is not None and self.customers <= 0:
            raise ConfigError(f"customers must be positive, got {self.customers!r}")
        if not (len(self.pmf) == len(self.cdf) == len(self.weighted_cumsum)):
            raise ConfigError("pmf, cdf, and weighted_cumsum must share a grid")
        if len(self.pmf) == 0:
            raise DataError("empty probability grid")

    @property
    def grid_max(self) -> int:
        return len(self.pmf) - 1

    @property
    def mean_count(self) -> float:
        return float(self.weighted_cumsum[-1])

    @classmethod
    def from_fitted(
        cls, model: FittedModel, n_defects: int, customers: int | None = None
    ) -> "MetricContext":
        """Resolve the model tail onto an integer grid and precompute sums."""
        grid_max = 1024
        capped = False
        while float(model.cdf(float(grid_max))) / model.cdf_at_inf() < 1.0 - TAIL_MASS_TOLERANCE:
            if grid_max >= TAIL_GRID_CAP:
                capped = True
                break
            grid_max = min(grid_max * 2, TAIL_GRID_CAP)
        if capped:
            warnings.warn(
                f"count grid capped at {TAIL_GRID_CAP}; tail mass beyond the cap "
                "is ignored and tail-sensitive metrics are lower bounds",
                DataQualityWarning,
                stacklevel=2,
            )
        j = np.arange(grid_max + 1, dtype=float)
        pmf = np.asarray(discrete_pmf(model, j), dtype=float)
        return cls(
            n_defects=n_defects,
            pmf=pmf,
            cdf=np.cumsum(pmf),
            weighted_cumsum=np.cumsum(j * pmf),
            customers=customers,
            model=model,
            tail_capped=capped,
        )

    @classmethod
    def from_pmf(
        cls, pmf: Sequence[float], n_defects: int, customers: int | None = None
    ) -> "MetricContext":
        """Build a context from explicit masses (normalized to sum to one)."""
        arr = np.asarray(pmf, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DataError("pmf must be a non-empty 1-D sequence")
        if np.any(~np.isfinite(arr)) or np.any(arr < 0.0):
            raise DataError("pmf entries must be finite and nonnegative")
        total = float(arr.sum())
        if total <= 0.0:
            raise DataError("pmf has no mass")
        arr = arr / total
        j = np.arange(arr.size, dtype=float)
        return cls(
            n_defects=n_defects,
            pmf=arr,
            cdf=np.cumsum(arr),
            weighted_cumsum=np.cumsum(j * arr),
            customers=customers,
        )


def _check_count(d, name: str = "d") -> int:
    if isinstance(d, float) and not d.is_integer():
        raise ConfigError(f"{name} must be an integer count, got {d!r}")
    d = int(d)
    if d < 0:
        raise ConfigError(f"{name} must be >= 0, got {d!r}")
    return d


def _cdf_at(ctx: MetricContext, d: int) -> float:
    return float(ctx.cdf[min(d, ctx.grid_max)])


def _wsum_at(ctx: MetricContext, d: int) -> float:
    # weighted_cumsum indexed with S(-1) = 0
    if d < 0:
        return 0.0
    return float(ctx.weighted_cumsum[min(d, ctx.grid_max)])


def decumulative(ctx: MetricContext, d) -> float:
    """P(D > d) = 1 - F(d), the survival probability of the count model."""
    d = _check_count(d)
    return 1.0 - _cdf_at(ctx, d)


def expected_defects_beyond(ctx: MetricContext, d) -> float:
    """N * P(D > d): defects expected to be rediscovered more than d times."""
    return ctx.n_defects * decumulative(ctx, d)


class PercentileMetric(NamedTuple):
    threshold: int
    value: float


def defects_affecting_customer_share(
    ctx: MetricContext, x_percent: float, literal_cdf_form: bool = False
) -> PercentileMetric:
    """Defects whose rediscoveries reach more than x percent of customers.

    The count threshold is floor(x * customers / 100); the value is
    N * P(D > threshold), the same tail form as expected_defects_beyond at
    the derived threshold. With literal_cdf_form=True the value is
    N * P(D <= threshold) instead, for callers that want the complementary
    reading of the same threshold.
    """
    if ctx.customers is None:
        raise ConfigError(
            "customer-share metric needs the customer-base size; "
            "build the context with customers set"
        )
    if not (0.0 < x_percent <= 100.0):
        raise ConfigError(f"x_percent must be in (0, 100], got {x_percent!r}")
    d = int(math.floor(x_percent * ctx.customers / 100.0))
    if d == 0:
        warnings.warn(
            f"count threshold floor({x_percent!r}% of {ctx.customers}) is 0; "
            "the metric counts every rediscovered defect",
            DataQualityWarning,
            stacklevel=2,
        )
    if literal_cdf_form:
        return PercentileMetric(d, ctx.n_defects * _cdf_at(ctx, d))
    return PercentileMetric(d, ctx.n_defects * (1.0 - _cdf_at(ctx, d)))


def residual_rediscoveries(ctx: MetricContext, d) -> float:
    """N * sum(j * p(j), j >= d): expected rediscoveries at or past d."""
    d = _check_count(d)
    if d > ctx.grid_max:
        return 0.0
    return ctx.n_defects * (ctx.mean_count - _wsum_at(ctx, d - 1))


def partial_expectation(ctx: MetricContext, lo, hi) -> float:
    """N * sum(j * p(j), lo <= j <= hi); empty ranges contribute zero."""
    lo = _check_count(lo, "lo")
    hi = _check_count(hi, "hi")
    if hi < lo:
        return 0.0
    return ctx.n_defects * (_wsum_at(ctx, hi) - _wsum_at(ctx, lo - 1))


def threshold_for_load(ctx: MetricContext, load: float) -> int:
    """Smallest d >= 1 whose cumulative expected rediscoveries reach load.

    Finds the first d with N * sum(j * p(j), j <= d) >= load. Raises
    NumericError when even the full grid cannot reach the load.
    """
    if load < 0.0 or not math.isfinite(load):
        raise ConfigError(f"load must be finite and >= 0, got {load!r}")
    cum = ctx.n_defects * ctx.weighted_cumsum
    idx = int(np.searchsorted(cum, load, side="left"))
    if idx > ctx.grid_max:
        raise NumericError(
            f"threshold unreachable: cumulative expected rediscoveries top out "
            f"at {cum[-1]:.6g}, below the requested load {load!r}"
        )
    return max(idx, 1)


def load_threshold_exceedance(ctx: MetricContext, load: float) -> float:
    """P(D > d_load) at the load threshold: the defect fraction still beyond it."""
    d = threshold_for_load(ctx, load)
    return 1.0 - _cdf_at(ctx, d)


def load_threshold_coverage(ctx: MetricContext, load: float) -> float:
    """P(D <= d_load) at the load threshold: the defect fraction it covers."""
    d = threshold_for_load(ctx, load)
    return _cdf_at(ctx, d)


def planning_threshold(
    ctx: MetricContext, alpha: float, continuous_floor: bool = False
) -> int:
    """Smallest d with F(d) >= alpha.

    With continuous_floor=True the threshold is floor(Q(alpha)) of the
    underlying continuous model instead of the discrete search; the two can
    differ by one count near cdf jumps.
    """
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must be inside (0, 1), got {alpha!r}")
    if continuous_floor:
        if ctx.model is None:
            raise ConfigError("continuous_floor requires a fitted model in the context")
        return max(int(math.floor(float(ctx.model.quantile(alpha)))), 0)
    if alpha > float(ctx.cdf[-1]):
        raise NumericError(
            f"alpha {alpha!r} beyond the resolved tail mass {float(ctx.cdf[-1]):.12g}"
        )
    return int(np.searchsorted(ctx.cdf, alpha, side="left"))


def planning_rediscoveries(
    ctx: MetricContext, alpha: float, continuous_floor: bool = False
) -> float:
    """Expected rediscoveries to plan for at confidence alpha.

    N * sum(j * p(j), 1 <= j <= d_alpha). When alpha is already met at
    d = 0 the summation range is empty and the value is 0, with a warning,
    since planning for zero rediscoveries usually signals a degenerate fit
    or an overly low alpha.
    """
    d = planning_threshold(ctx, alpha, continuous_floor=continuous_floor)
    if d == 0:
        warnings.warn(
            f"confidence {alpha!r} is reached at zero rediscoveries; "
            "planning value is 0",
            DataQualityWarning,
            stacklevel=2,
        )
        return 0.0
    return ctx.n_defects * _wsum_at(ctx, d)


# Reports and the CLI address the metrics by their numbers.
m1 = expected_defects_beyond
m2 = defects_affecting_customer_share
m3 = residual_rediscoveries
m4 = load_threshold_exceedance
m5 = load_threshold_coverage
m6 = planning_rediscoveries


def capacity(people: int, mu: float, horizon_years: float) -> float:
    """Rediscoveries a team of `people` can absorb in the horizon: A * mu * T."""
    if people <= 0:
        raise ConfigError(f"people must be positive, got {people!r}")
    if not mu > 0.0:
        raise ConfigError(f"mu must be positive, got {mu!r}")
    if not horizon_years > 0.0:
        raise ConfigError(f"horizon_years must be positive, got {horizon_years!r}")
    return people * mu * horizon_years


def staffing_from_planning_value(value: float, mu: float, horizon_years: float) -> int:
    """People needed so capacity covers the planning value: ceil(value / (mu * T))."""
    if value < 0.0 or not math.isfinite(value):
        raise ConfigError(f"planning value must be finite and >= 0, got {value!r}")
    if not mu > 0.0:
        raise ConfigError(f"mu must be positive, got {mu!r}")
    if not horizon_years > 0.0:
        raise ConfigError(f"horizon_years must be positive, got {horizon_years!r}")
    return int(math.ceil(value / (mu * horizon_years) - 1e-12))


def staffing_for_confidence(
    ctx: MetricContext, alpha: float, mu: float, horizon_years: float
) -> int:
    """Staff so the horizon's capacity covers the alpha-confidence workload."""
    return staffing_from_planning_value(
        planning_rediscoveries(ctx, alpha), mu, horizon_years
    )


def busy_fraction(arrival_rate: float, k: int, mu: float) -> float:
    """Percent of service capacity consumed: 100 * lambda / (k * mu)."""
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k!r}")
    if not mu > 0.0:
        raise ConfigError(f"mu must be positive, got {mu!r}")
    if arrival_rate < 0.0:
        raise ConfigError(f"arrival_rate must be >= 0, got {arrival_rate!r}")
    value = 100.0 * arrival_rate / (k * mu)
    if value > 100.0:
        warnings.warn(
            f"busy fraction {value:.3f}% exceeds 100%: the queue has no steady state",
            DataQualityWarning,
            stacklevel=2,
        )
    return value


@dataclass(frozen=True)
class ReleaseComparisonRow:
    release_id: str
    m1: float
    exposure_ratio: float
    rank: int


def release_comparison(
    entries: Iterable[tuple[str, MetricContext]], d
) -> list[ReleaseComparisonRow]:
    """Rank releases by expected defects rediscovered beyond d.

    Smaller is better; equal values share a rank (competition ranking, so
    the next distinct value skips the tied positions). The exposure ratio is
    total observed rediscoveries per defect, taken from the fitted model's
    sample provenance when available.
    """
    d = _check_count(d)
    staged = []
    for release_id, ctx in entries:
        value = expected_defects_beyond(ctx, d)
        ref = ctx.model.sample_ref if ctx.model is not None else None
        if ref is not None and ref.n_defects > 0:
            exposure = ref.total_rediscoveries / ref.n_defects
        else:
            exposure = math.nan
        staged.append((release_id, value, exposure))
    values = [v for _, v, _ in staged]
    rows = [
        ReleaseComparisonRow(
            release_id=rid,
            m1=value,
            exposure_ratio=exposure,
            rank=1 + sum(1 for other in values if other < value),
        )
        for rid, value, exposure in staged
    ]
    rows.sort(key=lambda r: (r.rank, r.release_id))
    return rows
