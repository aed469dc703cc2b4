"""Empirical-distribution machinery: ECDF, KS distances, DKW bounds, QQ points.

Only the KS statistic is computed, never p-values: acceptance thresholds
throughout the project are set from the DKW inequality plus explicit
slack, which keeps every tolerance transparent and derivable. Ties use
the standard right-continuous ECDF convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Ecdf",
    "Summary",
    "ks_one_sample",
    "ks_two_sample",
    "dkw_bound",
    "qq_points",
    "summary",
]


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF over a sorted sample."""

    values: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "Ecdf":
        arr = np.sort(np.asarray(samples, dtype=float))
        if arr.size == 0:
            raise InvalidInputError("empty sample set")
        return cls(arr)

    def __call__(self, x):
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        out = idx / self.values.size
        return float(out) if np.asarray(x).ndim == 0 else out


def _as_sorted(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise InvalidInputError("empty sample set")
    return np.sort(arr)


def ks_one_sample(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup_x |ECDF(x) - F(x)| against a reference CDF."""
    xs = _as_sorted(samples)
    n = xs.size
    f = np.asarray(cdf(xs), dtype=float)
    if f.shape != xs.shape:
        raise InvalidInputError("cdf must evaluate elementwise on arrays")
    i = np.arange(1, n + 1)
    return float(
        max(np.abs(i / n - f).max(), np.abs((i - 1) / n - f).max())
    )


def ks_two_sample(a, b) -> float:
    """sup-norm distance between two ECDFs, evaluated on the pooled points."""
    xa = _as_sorted(a)
    xb = _as_sorted(b)
    pooled = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pooled, side="right") / xa.size
    fb = np.searchsorted(xb, pooled, side="right") / xb.size
    return float(np.abs(fa - fb).max())


def dkw_bound(n: int, delta: float) -> float:
    """Radius with P(sup |ECDF - F| > radius) <= delta for N = n samples."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if not (0.0 < delta < 1.0):
        raise InvalidInputError("delta must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def _invert_cdf(cdf: Callable, level: float) -> float:
    """Leftmost x with F(x) >= level, by bracketing plus bisection."""
    lo, hi = -1.0, 1.0
    while float(cdf(np.asarray(hi))) < level:
        hi = hi * 2.0 + 1.0
    while float(cdf(np.asarray(lo))) >= level:
        lo = lo * 2.0 - 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(cdf(np.asarray(mid))) >= level:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, abs(hi)):
            break
    return hi


def _empirical_quantile(sorted_values: np.ndarray, level: float) -> float:
    # leftmost order statistic at or past the level (inverse-ECDF rule)
    n = sorted_values.size
    idx = max(math.ceil(level * n) - 1, 0)
    return float(sorted_values[idx])


def qq_points(
    samples,
    reference,
    k: int,
) -> list[tuple[float, float]]:
    """k pairs (empirical quantile, reference quantile) at levels i/(k+1).

    ``reference`` is either a CDF callable (inverted by bisection,
    leftmost root on flat regions) or a reference sample whose order
    statistics are used directly.
    """
    if k < 2:
        raise InvalidInputError("qq_points needs k >= 2")
    xs = _as_sorted(samples)
    ref_samples = None
    if not callable(reference):
        ref_samples = _as_sorted(reference)
    points = []
    for i in range(1, k + 1):
        level = i / (k + 1)
        emp = _empirical_quantile(xs, level)
        if ref_samples is not None:
            ref = _empirical_quantile(ref_samples, level)
        else:
            ref = _invert_cdf(reference, level)
        points.append((emp, ref))
    return points


@dataclass(frozen=True)
class Summary:
    mean: float
    variance: float | None
    min: float
    max: float
    n: int


def summary(samples: Sequence[float] | np.ndarray) -> Summary:
    """One-pass streaming mean/variance (Welford), with min/max/count."""
    n = 0
    mean = 0.0
    m2 = 0.0
    lo = math.inf
    hi = -math.inf
    for x in np.asarray(samples, dtype=float):
        x = float(x)
        n += 1
        delta = x - mean
        mean += delta / n
        m2 += delta * (x - mean)
        if x < lo:
            lo = x
        if x > hi:
            hi = x
    if n == 0:
        raise InvalidInputError("empty sample set")
    variance = m2 / (n - 1) if n >= 2 else None
    return Summary(mean, variance, lo, hi, n)
