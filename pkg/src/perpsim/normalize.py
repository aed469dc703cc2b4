"""Map raw scaled samples of R_n to the renormalized values that converge.

Each regime carries its own map:

* Case I    r / rho**(n-1), computed in scaled arithmetic (an exact
  exponent shift when rho = 2, otherwise one multiply by a precomputed
  scaled power),
* Case II   sgn(r) |r|**(1/(v sqrt n)) / exp(mu sqrt n / v), with the
  sign kept only in the signed sub-case,
* Case III  |r|**(1/(v sqrt n)) for the random-walk sub-cases and
  |r|**(1/gamma_n) for the extreme-value ones,
* Case IV   r / sqrt(n) as a plain native float.

r = 0 maps to 0 in the power cases: the event has probability zero for
continuous models and is measure-irrelevant for discrete ones at large
n, and a sentinel would pollute sample sets. Results can be inf when a
normalized value genuinely lands past native float range (the
exp-Frechet limits have log-scale tails); downstream KS statistics are
rank-based and unaffected.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentsError, NativeRangeError
from .models import RegimeReport
from .scaled import (
    ScaledReal,
    ScaledVector,
    from_real,
    log_abs,
    mul,
    pow_int,
    reciprocal,
    vec_mul,
)

__all__ = ["apply_normalization", "normalize_samples"]

_POWER_CASES = {
    "II-abs",
    "II-signed",
    "III-clt",
    "III-boundary-vanishing",
    "III-evt",
    "III-boundary-growing",
}


def _exp_or_inf(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _native(r: ScaledReal) -> float:
    """Native value with graceful underflow; only overflow is an error.

    Normalized samples are statistics, so a value smaller than the
    tiniest double rounds to (signed) zero instead of raising the way
    ``to_real`` does.
    """
    if r.sign == 0:
        return 0.0
    if r.exponent > 1023:
        raise NativeRangeError(
            f"normalized value with exponent {r.exponent} exceeds native range"
        )
    return math.ldexp(r.sign * r.mantissa, r.exponent)


def _native_vec(v: ScaledVector) -> np.ndarray:
    nonzero = v.sign != 0
    if np.any(nonzero & (v.exponent > 1023)):
        raise NativeRangeError("normalized values exceed native range")
    # exponents <= -1100 already round to zero; clamping keeps ldexp happy
    out = np.ldexp(v.sign * v.mantissa, np.maximum(v.exponent, -1100))
    return np.where(nonzero, out, 0.0)


def _rho_power_factor(rho: float, n: int) -> ScaledReal:
    """Scaled rho**-(n-1), one squaring chain (log2 n roundings)."""
    return reciprocal(pow_int(from_real(rho), n - 1))


def _power_args(regime: RegimeReport, n: int, gamma_n: float | None):
    """Exponent divisor and log-shift for the power-map cases."""
    case = regime.case
    if case in ("III-evt", "III-boundary-growing"):
        if gamma_n is None:
            raise InvalidArgumentsError(f"{case} normalization needs gamma_n")
        return gamma_n, 0.0
    divisor = regime.v * math.sqrt(n)
    if case in ("II-abs", "II-signed"):
        return divisor, regime.mu * math.sqrt(n) / regime.v
    return divisor, 0.0


def apply_normalization(
    regime: RegimeReport,
    r: ScaledReal,
    n: int,
    gamma_n: float | None = None,
) -> float:
    """Normalize one sample of R_n for the given regime."""
    case = regime.case
    if case in ("I-sym", "I-asym"):
        if r.sign == 0:
            return 0.0
        if regime.rho == 2.0:
            return _native(ScaledReal(r.sign, r.exponent - (n - 1), r.mantissa))
        return _native(mul(r, _rho_power_factor(regime.rho, n)))
    if case == "IV":
        return _native(r) / math.sqrt(n)
    if case in _POWER_CASES:
        if r.sign == 0:
            return 0.0
        if case.startswith("III") and r.sign < 0:
            raise InvalidArgumentsError(
                "Case III normalization requires positive samples"
            )
        divisor, shift = _power_args(regime, n, gamma_n)
        mag = _exp_or_inf(log_abs(r) / divisor - shift)
        return r.sign * mag if case == "II-signed" else mag
    raise InvalidArgumentsError(f"no normalization for regime {case}")


def normalize_samples(
    regime: RegimeReport,
    values: ScaledVector,
    n: int,
    gamma_n: float | None = None,
) -> np.ndarray:
    """Vectorized apply_normalization over a batch (same formulas)."""
    case = regime.case
    sign = values.sign
    if case in ("I-sym", "I-asym"):
        if regime.rho == 2.0:
            shifted = ScaledVector(
                sign,
                np.where(sign == 0, 0, values.exponent - (n - 1)),
                values.mantissa,
            )
            return _native_vec(shifted)
        f = _rho_power_factor(regime.rho, n)
        fv = ScaledVector(
            np.full(sign.shape, f.sign, np.int8),
            np.full(sign.shape, f.exponent, np.int64),
            np.full(sign.shape, f.mantissa),
        )
        return _native_vec(vec_mul(values, fv))
    if case == "IV":
        return _native_vec(values) / math.sqrt(n)
    if case in _POWER_CASES:
        if case.startswith("III") and np.any(sign < 0):
            raise InvalidArgumentsError(
                "Case III normalization requires positive samples"
            )
        divisor, shift = _power_args(regime, n, gamma_n)
        nonzero = sign != 0
        logs = np.where(
            nonzero,
            values.exponent * math.log(2.0) + np.log(values.mantissa),
            -np.inf,
        )
        with np.errstate(over="ignore"):
            mag = np.exp(logs / divisor - shift)
        if case == "II-signed":
            return sign * mag
        return mag
    raise InvalidArgumentsError(f"no normalization for regime {case}")
