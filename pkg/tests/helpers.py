"""Independent oracles used across the test suite.

Everything here is deliberately written from first principles (definitions,
exhaustive enumeration, bisection) rather than by calling the library code
under test, so agreement is evidence and not tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def exhaustive_lambdas(values) -> tuple[float, ...]:
    """Sample L-moments straight from the order-statistic definition.

    l_r is the average over all r-subsets of the expected linear combination
    of the ordered subset, e.g. l_2 = mean((max - min) / 2) over all pairs.
    Returns as many orders as the sample size allows, up to four.
    """
    coeffs = {
        1: (1.0,),
        2: (-0.5, 0.5),
        3: (1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0),
        4: (-0.25, 0.75, -0.75, 0.25),
    }
    x = sorted(float(v) for v in values)
    n = len(x)
    out = []
    for r in range(1, min(4, n) + 1):
        total = 0.0
        count = 0
        for subset in itertools.combinations(x, r):
            ordered = sorted(subset)
            total += sum(c * v for c, v in zip(coeffs[r], ordered))
            count += 1
        out.append(total / count)
    return tuple(out)


def bisect_quantile(cdf, u: float, lo: float, hi: float, iters: int = 200) -> float:
    """Quantile by pure bisection of a scalar cdf callable."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class BruteMetrics:
    """Direct-sum reference implementation of the risk metrics.

    Works on an explicit finite pmf; every quantity is a literal loop over
    the support, using math.fsum for exact-as-possible accumulation.
    """

    def __init__(self, pmf, n_defects: int, customers: int | None = None):
        self.p = [float(v) for v in pmf]
        total = math.fsum(self.p)
        self.p = [v / total for v in self.p]
        self.n = n_defects
        self.customers = customers

    def cdf(self, d: int) -> float:
        d = min(d, len(self.p) - 1)
        return math.fsum(self.p[: d + 1])

    def m1(self, d: int) -> float:
        return self.n * (1.0 - self.cdf(d))

    def m2(self, x_percent: float) -> tuple[int, float]:
        d = int(math.floor(x_percent * self.customers / 100.0))
        return d, self.n * (1.0 - self.cdf(d))

    def partial(self, lo: int, hi: int) -> float:
        hi = min(hi, len(self.p) - 1)
        return self.n * math.fsum(j * self.p[j] for j in range(lo, hi + 1))

    def m3(self, d: int) -> float:
        return self.partial(d, len(self.p) - 1)

    def load_threshold(self, load: float) -> int:
        for d in range(1, len(self.p)):
            if load <= self.partial(1, d):
                return d
        raise ValueError("unreachable load")

    def m4(self, load: float) -> float:
        return 1.0 - self.cdf(self.load_threshold(load))

    def m5(self, load: float) -> float:
        return self.cdf(self.load_threshold(load))

    def quantile_d(self, alpha: float) -> int:
        for d in range(len(self.p)):
            if self.cdf(d) >= alpha:
                return d
        raise ValueError("alpha beyond support")

    def m6(self, alpha: float) -> float:
        d = self.quantile_d(alpha)
        if d == 0:
            return 0.0
        return self.partial(1, d)


def random_pmf(rng: np.random.Generator, max_support: int = 20) -> np.ndarray:
    """A random sparse-ish pmf on 0..support with occasional zero entries."""
    size = int(rng.integers(2, max_support + 1))
    raw = rng.random(size) ** 2
    raw[rng.random(size) < 0.2] = 0.0
    if raw.sum() == 0.0:
        raw[0] = 1.0
    return raw / raw.sum()
