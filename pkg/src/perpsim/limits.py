"""Reference limit laws: samplers for all of them, CDFs where closed forms exist.

The renormalized recursion converges to one of:

* BernoulliConvolution(lam): sum of lam**(k-1) * eps_k over k >= 1 with
  i.i.d. fair signs eps. Uniform on [-2, 2] at lam = 1/2; singular for
  lam < 1/2; no usable closed CDF away from 1/2, so verification there
  falls back to two-sample comparison against the truncated-series
  sampler.
* SymmetrizedPerpetuity(lam, p): r * X with r an independent fair sign
  and X = sum of lam**k * prod_{j<=k} eps_j, eps biased with P(+1) = p.
* LogNormalPositive / LogNormalSymmetric: e^N and r * e^N.
* ExpHalfNormal: e^|N|, CDF 2 Phi(ln x) - 1 on x >= 1.
* ExpFrechet(alpha): e^V with V Frechet, CDF exp(-(ln x)**alpha) on
  x > 1. Heavy enough that samples occasionally exceed native float
  range and come back as inf; rank statistics downstream are fine with
  that.
* Gaussian(beta2).

Series samplers truncate at m terms with error at most
lam**m / (1 - lam), so m is chosen to push that below 1e-9, well under
every statistical tolerance in the test battery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr

from .errors import InvalidInputError, UnavailableError, UnsupportedError
from .models import RegimeReport

__all__ = [
    "BernoulliConvolution",
    "SymmetrizedPerpetuity",
    "LogNormalPositive",
    "LogNormalSymmetric",
    "ExpHalfNormal",
    "ExpFrechet",
    "Gaussian",
    "LimitLaw",
    "label",
    "has_cdf",
    "limit_for",
    "sample_limit",
    "cdf",
    "bc_truncation_bound",
    "default_series_terms",
]

_SERIES_TARGET = 1e-9


@dataclass(frozen=True)
class BernoulliConvolution:
    lam: float

    def __post_init__(self) -> None:
        if not (0.0 < self.lam < 1.0):
            raise InvalidInputError("lam must lie in (0, 1)")


@dataclass(frozen=True)
class SymmetrizedPerpetuity:
    lam: float
    p: float

    def __post_init__(self) -> None:
        if not (0.0 < self.lam < 1.0):
            raise InvalidInputError("lam must lie in (0, 1)")
        if not (0.0 < self.p < 1.0):
            raise InvalidInputError("p must lie in (0, 1)")


@dataclass(frozen=True)
class LogNormalPositive:
    pass


@dataclass(frozen=True)
class LogNormalSymmetric:
    pass


@dataclass(frozen=True)
class ExpHalfNormal:
    pass


@dataclass(frozen=True)
class ExpFrechet:
    alpha: float

    def __post_init__(self) -> None:
        if not (self.alpha < 0.0):
            raise InvalidInputError("alpha must be negative")


@dataclass(frozen=True)
class Gaussian:
    beta2: float

    def __post_init__(self) -> None:
        if not (self.beta2 > 0.0):
            raise InvalidInputError("beta2 must be positive")


LimitLaw = Union[
    BernoulliConvolution,
    SymmetrizedPerpetuity,
    LogNormalPositive,
    LogNormalSymmetric,
    ExpHalfNormal,
    ExpFrechet,
    Gaussian,
]


def label(law: LimitLaw) -> str:
    if isinstance(law, BernoulliConvolution):
        return f"BernoulliConvolution({law.lam:g})"
    if isinstance(law, SymmetrizedPerpetuity):
        return f"SymmetrizedPerpetuity({law.lam:g}, {law.p:g})"
    if isinstance(law, ExpFrechet):
        return f"ExpFrechet({law.alpha:g})"
    if isinstance(law, Gaussian):
        return f"Gaussian({law.beta2:g})"
    return type(law).__name__


def has_cdf(law: LimitLaw) -> bool:
    if isinstance(law, BernoulliConvolution):
        return law.lam == 0.5
    return not isinstance(law, SymmetrizedPerpetuity)


def limit_for(regime: RegimeReport) -> LimitLaw:
    """The law the normalized samples converge to in this regime."""
    case = regime.case
    if case == "I-sym":
        return BernoulliConvolution(regime.lam)
    if case == "I-asym":
        return SymmetrizedPerpetuity(regime.lam, regime.p)
    if case == "II-abs":
        return LogNormalPositive()
    if case == "II-signed":
        return LogNormalSymmetric()
    if case in ("III-clt", "III-boundary-vanishing"):
        return ExpHalfNormal()
    if case in ("III-evt", "III-boundary-growing"):
        return ExpFrechet(regime.alpha)
    if case == "IV":
        return Gaussian(regime.beta2)
    raise UnsupportedError(f"no limit law for regime {case}")


def bc_truncation_bound(lam: float, m: int) -> float:
    """Worst-case truncation error of the m-term series: lam**m / (1-lam)."""
    return lam**m / (1.0 - lam)


def default_series_terms(lam: float, target: float = _SERIES_TARGET) -> int:
    """Smallest m with bc_truncation_bound(lam, m) < target."""
    m = max(1, math.ceil(math.log(target * (1.0 - lam)) / math.log(lam)))
    while bc_truncation_bound(lam, m) >= target:
        m += 1
    return m


def _bc_from_signs(lam: float, signs: np.ndarray) -> np.ndarray:
    """Series value for explicit sign rows; shared-stream truncation tests."""
    m = signs.shape[-1]
    weights = lam ** np.arange(m)
    return signs @ weights


def _frechet_exp(alpha: float, u: np.ndarray) -> np.ndarray:
    # V = (-ln u)^(1/alpha) inverts the Frechet CDF; result is e^V
    with np.errstate(over="ignore"):
        return np.exp((-np.log(u)) ** (1.0 / alpha))


def sample_limit(
    law: LimitLaw,
    rng: np.random.Generator,
    series_terms: int | None = None,
    size: int | None = None,
):
    """Draw from the limit law; scalar when size is None.

    series_terms applies to the series laws only and defaults to the
    1e-9 truncation target.
    """
    k = 1 if size is None else int(size)
    if k < 1:
        raise InvalidInputError("size must be >= 1")

    if isinstance(law, BernoulliConvolution):
        m = series_terms or default_series_terms(law.lam)
        if m < 1:
            raise InvalidInputError("series_terms must be >= 1")
        signs = np.where(rng.random((k, m)) < 0.5, 1.0, -1.0)
        out = _bc_from_signs(law.lam, signs)
    elif isinstance(law, SymmetrizedPerpetuity):
        m = series_terms or default_series_terms(law.lam)
        if m < 1:
            raise InvalidInputError("series_terms must be >= 1")
        eps = np.where(rng.random((k, m)) < law.p, 1.0, -1.0)
        prods = np.cumprod(eps, axis=1)
        x = 1.0 + prods @ (law.lam ** np.arange(1, m + 1))
        r = np.where(rng.random(k) < 0.5, 1.0, -1.0)
        out = r * x
    elif isinstance(law, LogNormalPositive):
        out = np.exp(rng.standard_normal(k))
    elif isinstance(law, LogNormalSymmetric):
        x = np.exp(rng.standard_normal(k))
        out = np.where(rng.random(k) < 0.5, 1.0, -1.0) * x
    elif isinstance(law, ExpHalfNormal):
        out = np.exp(np.abs(rng.standard_normal(k)))
    elif isinstance(law, ExpFrechet):
        u = rng.random(k) + 2.0**-54
        out = _frechet_exp(law.alpha, u)
    elif isinstance(law, Gaussian):
        out = math.sqrt(law.beta2) * rng.standard_normal(k)
    else:
        raise InvalidInputError(f"unknown law {law!r}")
    return float(out[0]) if size is None else out


def cdf(law: LimitLaw, x):
    """Closed-form CDF; raises UnavailableError when none exists."""
    if not has_cdf(law):
        raise UnavailableError(
            f"{label(law)} has no closed CDF; compare against sample_limit"
        )
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)

    if isinstance(law, BernoulliConvolution):  # lam == 1/2: uniform on [-2, 2]
        out = np.clip((arr + 2.0) / 4.0, 0.0, 1.0)
    elif isinstance(law, LogNormalPositive):
        out = np.zeros_like(arr)
        pos = arr > 0
        out[pos] = ndtr(np.log(arr[pos]))
    elif isinstance(law, LogNormalSymmetric):
        out = np.full_like(arr, 0.5)
        nz = arr != 0
        out[nz] = 0.5 + np.sign(arr[nz]) * 0.5 * ndtr(np.log(np.abs(arr[nz])))
    elif isinstance(law, ExpHalfNormal):
        out = np.zeros_like(arr)
        m = arr >= 1.0
        out[m] = 2.0 * ndtr(np.log(arr[m])) - 1.0
    elif isinstance(law, ExpFrechet):
        out = np.zeros_like(arr)
        m = arr > 1.0
        out[m] = np.exp(-(np.log(arr[m]) ** law.alpha))
    elif isinstance(law, Gaussian):
        out = ndtr(arr / math.sqrt(law.beta2))
    else:
        raise InvalidInputError(f"unknown law {law!r}")
    return float(out[0]) if scalar else out
