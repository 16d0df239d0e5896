"""Sample and theoretical L-moments, feasibility bounds, and the ratio diagram.

L-moments summarize a distribution through linear combinations of order
statistics: lambda1 is the mean, lambda2 a dispersion measure, and the ratios
tau3 = lambda3/lambda2 and tau4 = lambda4/lambda2 play the role of skewness
and kurtosis. Sample estimates use the unbiased probability-weighted-moment
estimators

    b_r = n^-1 * sum_{i=r+1..n} x_(i) * [(i-1)(i-2)...(i-r)] / [(n-1)(n-2)...(n-r)]

on the ascending-ordered sample, from which

    l1 = b0
    l2 = 2 b1 - b0
    l3 = 6 b2 - 6 b1 + b0
    l4 = 20 b3 - 30 b2 + 12 b1 - b0.

Theoretical L-moments of a continuous distribution are integrals of its
quantile function against shifted Legendre polynomials; `theoretical_lmoments`
evaluates them with a double-exponential quadrature rule and is the numeric
oracle the fitting code is tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincinv, ndtri

from .errors import DataError, NumericError

__all__ = [
    "LMoments",
    "Feasibility",
    "sample_pwms",
    "sample_lambdas",
    "sample_lmoments",
    "ecdf_weibull",
    "tau4_lower_bound",
    "tau4_glo_bound",
    "kappa_feasibility",
    "theoretical_lmoments",
    "RatioDiagramDataset",
    "ratio_diagram_data",
    "diagram_to_csv",
]


@dataclass(frozen=True)
class LMoments:
    """First two L-moments plus L-skewness and L-kurtosis.

    ``n`` is the size of the sample the values were estimated from; 0 marks
    theoretical values. Population ratios always satisfy |tau3| < 1 and
    (5*tau3**2 - 1)/4 <= tau4 < 1, and those bounds are enforced for n = 0.
    Unbiased small-sample estimates can land outside them (the multiset
    {0, 0, 1, 1} has t4 = -1.5), so for n > 0 the fields are only required to
    be finite; `kappa_feasibility` classifies estimates where fitting needs
    the population region.
    """

    lambda1: float
    lambda2: float
    tau3: float
    tau4: float
    n: int = 0

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "tau3", "tau4"):
            if not math.isfinite(getattr(self, name)):
                raise NumericError(f"{name} must be finite, got {getattr(self, name)!r}")
        if not self.lambda2 >= 0.0:
            raise NumericError(f"lambda2 must be >= 0, got {self.lambda2!r}")
        if self.n == 0:
            eps = 1e-9
            if abs(self.tau3) >= 1.0 or not (-1.0 < self.tau4 < 1.0):
                raise NumericError(
                    "theoretical L-moment ratios must lie in (-1, 1), got "
                    f"tau3={self.tau3!r}, tau4={self.tau4!r}"
                )
            if self.tau4 < tau4_lower_bound(self.tau3) - eps:
                raise NumericError(
                    f"theoretical tau4={self.tau4!r} below the distribution bound "
                    f"for tau3={self.tau3!r}"
                )


def sample_pwms(values: Sequence[float] | np.ndarray) -> tuple[float, ...]:
    """Unbiased probability-weighted moments b_0 .. b_min(3, n-1).

    Returns as many orders as the sample size supports: b_r needs n >= r+1.
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 1:
        raise DataError("need at least one value")
    i = np.arange(1, n + 1, dtype=float)
    betas = [float(x.mean())]
    weight = np.ones(n)
    for r in range(1, min(4, n)):
        weight = weight * (i - r) / (n - r)
        betas.append(float(np.sum(weight * x) / n))
    return tuple(betas)


def sample_lambdas(values: Sequence[float] | np.ndarray) -> tuple[float, ...]:
    """Sample L-moments l_1 .. l_min(4, n), without ratios."""
    b = sample_pwms(values)
    out = [b[0]]
    if len(b) > 1:
        out.append(2 * b[1] - b[0])
    if len(b) > 2:
        out.append(6 * b[2] - 6 * b[1] + b[0])
    if len(b) > 3:
        out.append(20 * b[3] - 30 * b[2] + 12 * b[1] - b[0])
    return tuple(out)


def sample_lmoments(values: Sequence[float] | np.ndarray) -> LMoments:
    """Full sample L-moments with ratios; requires n >= 4.

    Raises NumericError for a constant sample (l2 = 0 leaves the ratios
    undefined).
    """
    n = len(values)
    if n < 4:
        raise DataError(f"need at least 4 values for L-moment ratios, got {n}")
    l1, l2, l3, l4 = sample_lambdas(values)
    if l2 == 0.0:
        raise NumericError("degenerate sample: constant values, ratios undefined")
    return LMoments(l1, l2, l3 / l2, l4 / l2, n=n)


def ecdf_weibull(rank: int, n: int) -> float:
    """Weibull plotting position rank/(n+1) for 1-based ranks."""
    if not (1 <= rank <= n):
        raise ValueError(f"rank must be in 1..{n}, got {rank}")
    return rank / (n + 1)


def tau4_lower_bound(tau3: float) -> float:
    """Lower tau4 bound satisfied by every distribution."""
    return (5.0 * tau3 * tau3 - 1.0) / 4.0


def tau4_glo_bound(tau3: float) -> float:
    """tau4 of the generalized logistic family; upper edge of the kappa region."""
    return (1.0 + 5.0 * tau3 * tau3) / 6.0


class Feasibility(str, Enum):
    FEASIBLE = "feasible"
    ABOVE_GLO = "above_glo"
    BELOW_LIMIT = "below_limit"


def kappa_feasibility(tau3: float, tau4: float) -> Feasibility:
    """Classify a (tau3, tau4) pair against the ratio-diagram landmarks.

    The landmarks are the generalized logistic curve above and the
    all-distribution limit below; both boundaries count as feasible. The
    classification is advisory for fitting: kappa members with h in (-1, 0)
    can sit slightly (up to ~0.004 in tau4) above the logistic curve, so
    ``above_glo`` points very close to it may still be fittable.
    """
    if not abs(tau3) < 1.0:
        raise ValueError(f"|tau3| must be < 1, got {tau3!r}")
    if tau4 > tau4_glo_bound(tau3):
        return Feasibility.ABOVE_GLO
    if tau4 < tau4_lower_bound(tau3):
        return Feasibility.BELOW_LIMIT
    return Feasibility.FEASIBLE


# ---------------------------------------------------------------------------
# Numeric integration of theoretical L-moments
# ---------------------------------------------------------------------------

def _de_rule(n_nodes: int = 1241, t_max: float = 3.1) -> tuple[np.ndarray, np.ndarray]:
    # Double-exponential (tanh-sinh) rule on (0, 1): u = sigmoid(pi*sinh(t)).
    # t_max is chosen so the extreme nodes stay strictly inside (0, 1) in
    # double precision; endpoint-singular quantiles (heavy tails) then remain
    # finite at every node.
    t = np.linspace(-t_max, t_max, n_nodes)
    z = np.pi * np.sinh(t)
    u = 1.0 / (1.0 + np.exp(-z))
    w = (t[1] - t[0]) * np.pi * np.cosh(t) * u * (1.0 - u)
    return u, w


_DE_U, _DE_W = _de_rule()


def theoretical_lmoments(quantile: Callable[[np.ndarray], np.ndarray]) -> LMoments:
    """L-moments of a distribution given its quantile function x(u).

    lambda_r = integral_0^1 x(u) P*_{r-1}(u) du with P* the shifted Legendre
    polynomials. ``quantile`` must accept a numpy array of probabilities in
    (0, 1). The quadrature resolves tails heavier than exponential accurately
    for tail exponents above roughly -0.5 (absolute error well under 1e-6).
    """
    u, w = _DE_U, _DE_W
    x = np.asarray(quantile(u), dtype=float)
    if x.shape != u.shape:
        raise ValueError("quantile function must be vectorized over u")
    p1 = 2.0 * u - 1.0
    p2 = (6.0 * u - 6.0) * u + 1.0
    p3 = ((20.0 * u - 30.0) * u + 12.0) * u - 1.0
    wx = w * x
    l1 = float(np.sum(wx))
    l2 = float(np.sum(wx * p1))
    l3 = float(np.sum(wx * p2))
    l4 = float(np.sum(wx * p3))
    if l2 <= 0.0:
        raise NumericError("integrated lambda2 is not positive")
    return LMoments(l1, l2, l3 / l2, l4 / l2, n=0)


# ---------------------------------------------------------------------------
# L-moment ratio diagram
# ---------------------------------------------------------------------------

def _q_glo(k: float) -> Callable[[np.ndarray], np.ndarray]:
    if abs(k) < 1e-12:
        return lambda u: np.log(u / (1.0 - u))
    return lambda u: (1.0 - ((1.0 - u) / u) ** k) / k


def _q_gev(k: float) -> Callable[[np.ndarray], np.ndarray]:
    if abs(k) < 1e-12:
        return lambda u: -np.log(-np.log(u))
    return lambda u: (1.0 - (-np.log(u)) ** k) / k


def _q_gpa(k: float) -> Callable[[np.ndarray], np.ndarray]:
    if abs(k) < 1e-12:
        return lambda u: -np.log1p(-u)
    return lambda u: -np.expm1(k * np.log1p(-u)) / k


def _q_gno(k: float) -> Callable[[np.ndarray], np.ndarray]:
    if abs(k) < 1e-12:
        return ndtri
    return lambda u: -np.expm1(-k * ndtri(u)) / k


def _q_pe3(a: float) -> Callable[[np.ndarray], np.ndarray]:
    # standard gamma with shape a; the location/scale drop out of the ratios
    return lambda u: gammaincinv(a, u)


_CURVE_FAMILIES: dict[str, tuple[Callable[[float], Callable], float, float]] = {
    # name -> (quantile factory, bracket for the shape parameter)
    "GLO": (_q_glo, -0.97, 0.97),
    "GEV": (_q_gev, -0.99, 8.0),
    "GNO": (_q_gno, -5.0, 5.0),
    "GPA": (_q_gpa, -0.97, 60.0),
}

_POINT_FAMILIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "EXP": lambda u: -np.log1p(-u),
    "NOR": ndtri,
    # GUM denotes the Gumbel (extreme-value type I) distribution here.
    "GUM": lambda u: -np.log(-np.log(u)),
    "RAY": lambda u: np.sqrt(-2.0 * np.log1p(-u)),
    "UNI": lambda u: u,
}


@dataclass(frozen=True)
class RatioDiagramDataset:
    """Everything needed to draw an L-moment ratio diagram.

    ``points``: sample overlays as (tau3, tau4, label) triples.
    ``curves``: per-family polylines of (tau3, tau4) pairs.
    ``marks``: single-point distributions such as EXP or NOR.
    ``bounds``: the GLO upper curve and the all-distribution lower curve.
    """

    points: tuple[tuple[float, float, str], ...]
    curves: dict[str, tuple[tuple[float, float], ...]]
    marks: dict[str, tuple[float, float]]
    bounds: dict[str, tuple[tuple[float, float], ...]]


def _tau3_of(quantile: Callable[[np.ndarray], np.ndarray]) -> float:
    return theoretical_lmoments(quantile).tau3


def _tau4_of(quantile: Callable[[np.ndarray], np.ndarray]) -> float:
    return theoretical_lmoments(quantile).tau4


@lru_cache(maxsize=8)
def _reference_geometry(
    grid_step: float,
) -> tuple[
    dict[str, tuple[tuple[float, float], ...]],
    dict[str, tuple[float, float]],
    dict[str, tuple[tuple[float, float], ...]],
]:
    grid = np.arange(-0.9, 0.9 + grid_step / 2, grid_step)
    grid = np.round(grid, 12)
    curves: dict[str, tuple[tuple[float, float], ...]] = {}
    for name, (factory, lo, hi) in _CURVE_FAMILIES.items():
        pts = []
        for t3 in grid:
            try:
                shape = brentq(
                    lambda k: _tau3_of(factory(k)) - t3, lo, hi, xtol=1e-12, rtol=1e-13
                )
            except ValueError:
                continue  # target tau3 outside this family's bracket
            pts.append((float(t3), _tau4_of(factory(shape))))
        curves[name] = tuple(pts)

    # PE3 spans tau3 > 0 via the gamma shape; mirror for negative skew.
    pe3_pts: list[tuple[float, float]] = []
    for t3 in grid:
        a3 = abs(float(t3))
        if a3 < 1e-9:
            pe3_pts.append((0.0, _tau4_of(ndtri)))
            continue
        shape = brentq(
            lambda a: _tau3_of(_q_pe3(a)) - a3, 1e-3, 1e6, xtol=1e-12, rtol=1e-13
        )
        pe3_pts.append((float(t3), _tau4_of(_q_pe3(shape))))
    curves["PE3"] = tuple(sorted(pe3_pts))

    marks = {}
    for name, q in _POINT_FAMILIES.items():
        lm = theoretical_lmoments(q)
        marks[name] = (lm.tau3, lm.tau4)

    bounds = {
        "GLO_UPPER": tuple((float(t3), tau4_glo_bound(float(t3))) for t3 in grid),
        "THEORETICAL_LOWER": tuple(
            (float(t3), tau4_lower_bound(float(t3))) for t3 in grid
        ),
    }
    return curves, marks, bounds


def ratio_diagram_data(
    samples: Iterable[tuple[str, LMoments]] = (),
    grid_step: float = 0.05,
) -> RatioDiagramDataset:
    """Reference curves, marks, bounds, and sample overlay points.

    ``samples`` is an iterable of (label, LMoments). The reference geometry
    is computed by numeric integration of each family's quantile function and
    cached in-process per grid step.
    """
    if not (0.0 < grid_step <= 0.5):
        raise ValueError(f"grid_step must be in (0, 0.5], got {grid_step!r}")
    curves, marks, bounds = _reference_geometry(float(grid_step))
    points = tuple((lm.tau3, lm.tau4, str(label)) for label, lm in samples)
    return RatioDiagramDataset(points=points, curves=dict(curves), marks=dict(marks), bounds=dict(bounds))


def diagram_to_csv(data: RatioDiagramDataset) -> str:
    """Serialize a diagram dataset to CSV with columns series,label,tau3,tau4."""
    lines = ["series,label,tau3,tau4"]
    for name in sorted(data.curves):
        for t3, t4 in data.curves[name]:
            lines.append(f"curve,{name},{t3!r},{t4!r}")
    for name in sorted(data.marks):
        t3, t4 = data.marks[name]
        lines.append(f"point,{name},{t3!r},{t4!r}")
    for name in sorted(data.bounds):
        for t3, t4 in data.bounds[name]:
            lines.append(f"bound,{name},{t3!r},{t4!r}")
    for t3, t4, label in data.points:
        lines.append(f"sample,{label},{t3!r},{t4!r}")
    return "\n".join(lines) + "\n"
