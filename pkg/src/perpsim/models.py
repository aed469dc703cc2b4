"""Joint (Q, M) distribution families, analytic moments, regime classification.

The recursion R_n = Q_n + M_n R_{n-1} behaves in one of four ways according
to mu = E ln|M| and the shape of |M|:

* Case I    mu > 0 with |M| a.s. constant (= rho > 1, random sign),
* Case II   mu > 0 with |M| genuinely random,
* Case III  mu = 0, E|M| > 1, M > 0 a.s.,
* Case IV   mu = 0, E|M| = 1 (forces M in {-1, +1}),

plus the convergent regime mu < 0, which carries no renormalization
machinery here. Families are a closed enumeration rather than arbitrary
user distributions: classification needs exact moments and declared tail
behavior, and estimating those from samples would risk silent
misclassification. The starting point is always R_0 = 0.

Every family draws one (q, m) pair from exactly two uniforms (first
feeds Q, second feeds M; jointly-atomic families use the first and
discard the second). Fixed consumption is what makes trajectory streams
reproducible and chunkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtri

from .errors import (
    DomainError,
    InvalidModelError,
    UnsupportedError,
)
from .scaled import ScaledVector, vec_from_log, vec_from_real

__all__ = [
    "QConstant",
    "QRademacher",
    "QLogNormal",
    "QLogPareto",
    "QLogBoundary",
    "QLaw",
    "DiscreteJoint",
    "ScaledRademacher",
    "LogNormalPair",
    "SignedUnit",
    "PairModel",
    "Moments",
    "RegimeReport",
    "CASE_IDS",
    "sample_pair",
    "analytic_moments",
    "classify",
    "tail_quantile",
    "beta_squared",
    "sign_gap",
]

_ATOL = 1e-12  # tolerance for exact-moment comparisons (mu == 0, E|M| == 1)
_SQRT_E = math.sqrt(math.e)


def _validate_prob(p: float, name: str) -> None:
    if not (0.0 < p < 1.0):
        raise InvalidModelError(f"{name} must lie strictly in (0, 1), got {p}")


# ---------------------------------------------------------------------------
# Q marginals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QConstant:
    """Q identically equal to ``value``."""

    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise InvalidModelError("constant Q must be finite")

    def draws(self, u: np.ndarray) -> ScaledVector:
        return vec_from_real(np.full(u.shape, self.value))

    def moments(self) -> tuple[float, float]:
        return self.value, self.value * self.value

    finite_variance = True

    @property
    def positive(self) -> bool:
        return self.value > 0.0


@dataclass(frozen=True)
class QRademacher:
    """Q = +1 with probability p, else -1."""

    p: float

    def __post_init__(self) -> None:
        _validate_prob(self.p, "Rademacher p")

    def draws(self, u: np.ndarray) -> ScaledVector:
        return vec_from_real(np.where(u < self.p, 1.0, -1.0))

    def moments(self) -> tuple[float, float]:
        return 2.0 * self.p - 1.0, 1.0

    finite_variance = True
    positive = False


@dataclass(frozen=True)
class QLogNormal:
    """Q = e^Y with Y ~ Normal(mean, var)."""

    mean: float
    var: float

    def __post_init__(self) -> None:
        if not (self.var > 0.0) or not math.isfinite(self.var):
            raise InvalidModelError("lognormal Q needs var > 0")
        if not math.isfinite(self.mean):
            raise InvalidModelError("lognormal Q mean must be finite")

    def draws(self, u: np.ndarray) -> ScaledVector:
        y = self.mean + math.sqrt(self.var) * ndtri(u)
        return vec_from_log(y)

    def moments(self) -> tuple[float, float]:
        return (
            math.exp(self.mean + 0.5 * self.var),
            math.exp(2.0 * self.mean + 2.0 * self.var),
        )

    finite_variance = True
    positive = True


@dataclass(frozen=True)
class QLogPareto:
    """Q = e^Y with Pareto tail P(Y > t) = (t/t0)**alpha for t >= t0.

    For alpha in (-2, 0), EY^2 is infinite and the running-maximum term
    dominates the recursion (the extreme-value sub-case of Case III).
    alpha = -2 exactly is constructible (its tail quantiles are well
    defined) but classifies as UNSUPPORTED: with a constant
    slowly-varying factor neither normalization is known to apply; use
    QLogBoundary to declare a growing or vanishing factor instead.
    """

    alpha: float
    t0: float

    def __post_init__(self) -> None:
        if not (-2.0 <= self.alpha < 0.0):
            raise InvalidModelError(
                f"Pareto tail index must lie in [-2, 0), got {self.alpha}"
            )
        if not (self.t0 > 0.0) or not math.isfinite(self.t0):
            raise InvalidModelError("Pareto scale t0 must be positive")

    def draws(self, u: np.ndarray) -> ScaledVector:
        # inverse tail: P(Y > t) = (t/t0)^alpha  =>  Y = t0 * u^(1/alpha)
        y = self.t0 * u ** (1.0 / self.alpha)
        return vec_from_log(y)

    def moments(self) -> tuple[float, float]:
        return math.inf, math.inf

    def tail(self, t: np.ndarray | float):
        return (np.asarray(t, dtype=float) / self.t0) ** self.alpha

    def tail_quantile(self, n: int) -> float:
        return self.t0 * n ** (-1.0 / self.alpha)

    finite_variance = False
    positive = True


@dataclass(frozen=True)
class QLogBoundary:
    """Q = e^Y with tail t**-2 * ell(t) at the alpha = -2 boundary.

    ell is declared, not estimated: "growing" means ell(t) = ln t (the
    extreme-value normalization still applies), "vanishing" means
    ell(t) = 1/ln t (the random-walk normalization takes over). The
    undeclarable ell ~ const case has no implemented limit and is
    rejected at classification.
    """

    ell: str
    t0: float

    def __post_init__(self) -> None:
        if self.ell not in ("growing", "vanishing"):
            raise InvalidModelError("ell must be 'growing' or 'vanishing'")
        if not math.isfinite(self.t0):
            raise InvalidModelError("t0 must be finite")
        if self.ell == "growing" and self.t0 < _SQRT_E:
            # ln(t)/t^2 only decreases past sqrt(e)
            raise InvalidModelError("growing boundary tail needs t0 >= sqrt(e)")
        if self.ell == "vanishing" and self.t0 * self.t0 * math.log(self.t0) < 1.0:
            raise InvalidModelError(
                "vanishing boundary tail needs t0^2 ln(t0) >= 1"
            )

    def tail(self, t: np.ndarray | float):
        t = np.asarray(t, dtype=float)
        if self.ell == "growing":
            return np.log(t) / (t * t)
        return 1.0 / (t * t * np.log(t))

    def _invert_tail(self, u: np.ndarray) -> np.ndarray:
        """Leftmost t >= t0 with tail(t) <= u, by vectorized bisection."""
        u = np.asarray(u, dtype=float)
        lo = np.full(u.shape, self.t0)
        hi = np.full(u.shape, 2.0 * self.t0)
        while True:
            open_ = self.tail(hi) > u
            if not np.any(open_):
                break
            hi = np.where(open_, hi * 2.0, hi)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = self.tail(mid) > u
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return 0.5 * (lo + hi)

    def draws(self, u: np.ndarray) -> ScaledVector:
        h0 = float(self.tail(self.t0))
        y = np.full(u.shape, self.t0)
        interior = u < h0
        if np.any(interior):
            y[interior] = self._invert_tail(u[interior])
        return vec_from_log(y)

    def moments(self) -> tuple[float, float]:
        return math.inf, math.inf

    finite_variance = False
    positive = True


QLaw = Union[QConstant, QRademacher, QLogNormal, QLogPareto, QLogBoundary]

_FINITE_VAR_QLAWS = (QConstant, QRademacher, QLogNormal)


# ---------------------------------------------------------------------------
# Joint (Q, M) families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteJoint:
    """Finite list of ((q, m), probability) atoms; dependence allowed."""

    atoms: tuple[tuple[tuple[float, float], float], ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise InvalidModelError("DiscreteJoint needs at least one atom")
        atoms = tuple(((float(q), float(m)), float(p)) for (q, m), p in self.atoms)
        total = math.fsum(p for _, p in atoms)
        if any(p < 0.0 or p > 1.0 for _, p in atoms):
            raise InvalidModelError("atom probabilities must lie in [0, 1]")
        if abs(total - 1.0) > 1e-9:
            raise InvalidModelError(f"atom probabilities sum to {total}, not 1")
        object.__setattr__(self, "atoms", atoms)

    def _tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        qs = np.array([q for (q, _), _ in self.atoms])
        ms = np.array([m for (_, m), _ in self.atoms])
        cum = np.cumsum([p for _, p in self.atoms])
        cum[-1] = 1.0
        return qs, ms, cum

    def scaled_draws(self, u_q: np.ndarray, u_m: np.ndarray):
        # joint atom chosen by the Q-slot uniform; the M-slot one is unused
        qs, ms, cum = self._tables()
        idx = np.searchsorted(cum, u_q, side="right")
        idx = np.minimum(idx, len(self.atoms) - 1)
        return vec_from_real(qs[idx]), vec_from_real(ms[idx])

    @property
    def positive(self) -> bool:
        return all(q > 0.0 and m > 0.0 for (q, m), _ in self.atoms)


@dataclass(frozen=True)
class ScaledRademacher:
    """M = rho * eps with rho > 1 and P(eps = +1) = p; Q independent."""

    rho: float
    p: float
    q_law: QLaw

    def __post_init__(self) -> None:
        if not (self.rho > 1.0) or not math.isfinite(self.rho):
            raise InvalidModelError(f"rho must exceed 1, got {self.rho}")
        _validate_prob(self.p, "sign probability p")
        if not isinstance(self.q_law, (QConstant, QRademacher)):
            raise InvalidModelError(
                "ScaledRademacher supports Q constant or Rademacher"
            )

    def scaled_draws(self, u_q: np.ndarray, u_m: np.ndarray):
        m = np.where(u_m < self.p, self.rho, -self.rho)
        return self.q_law.draws(u_q), vec_from_real(m)

    positive = False


@dataclass(frozen=True)
class LogNormalPair:
    """M = e^X with X ~ Normal(mu_x, v2); Q independent of M."""

    mu_x: float
    v2: float
    q_law: QLaw

    def __post_init__(self) -> None:
        if not (self.v2 > 0.0) or not math.isfinite(self.v2):
            raise InvalidModelError("v2 must be positive (M non-constant)")
        if not math.isfinite(self.mu_x):
            raise InvalidModelError("mu_x must be finite")
        if isinstance(self.q_law, QRademacher):
            raise InvalidModelError(
                "LogNormalPair takes a positive or constant Q family"
            )

    def scaled_draws(self, u_q: np.ndarray, u_m: np.ndarray):
        x = self.mu_x + math.sqrt(self.v2) * ndtri(u_m)
        return self.q_law.draws(u_q), vec_from_log(x)

    @property
    def positive(self) -> bool:
        return self.q_law.positive


@dataclass(frozen=True)
class SignedUnit:
    """M in {-1, +1} with P(M = +1) = p_m; Q independent, finite variance."""

    p_m: float
    q_law: QLaw

    def __post_init__(self) -> None:
        _validate_prob(self.p_m, "p_m")
        if not isinstance(self.q_law, _FINITE_VAR_QLAWS):
            raise InvalidModelError("SignedUnit requires a finite-variance Q")

    def scaled_draws(self, u_q: np.ndarray, u_m: np.ndarray):
        m = np.where(u_m < self.p_m, 1.0, -1.0)
        return self.q_law.draws(u_q), vec_from_real(m)

    positive = False


PairModel = Union[DiscreteJoint, ScaledRademacher, LogNormalPair, SignedUnit]


def sample_pair(model: PairModel, rng: np.random.Generator) -> tuple[float, float]:
    """One (q, m) draw; consumes exactly two uniforms from ``rng``.

    Heavy-tailed Q families can exceed native float range, in which case
    the returned q is inf; the simulation engine never takes this path
    (it keeps draws in scaled form).
    """
    u = rng.random(2) + 2.0**-54  # shift into the open interval (0, 1)
    qv, mv = model.scaled_draws(u[:1], u[1:])
    q = float(np.ldexp(qv.sign * qv.mantissa, np.minimum(qv.exponent, 1024))[0])
    m = float(np.ldexp(mv.sign * mv.mantissa, np.minimum(mv.exponent, 1024))[0])
    return q, m


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Moments:
    """Exact moments of (Q, M): mu = E ln|M|, v2 = var(ln|M|), etc."""

    mu: float
    v2: float
    abs_mean_m: float
    mean_m: float
    mean_q: float
    mean_q2: float
    mean_qm: float
    exact: bool = True


def analytic_moments(model: PairModel) -> Moments:
    """Closed-form moments for every supported family."""
    if isinstance(model, DiscreteJoint):
        probs = [p for _, p in model.atoms]
        qs = [q for (q, _), _ in model.atoms]
        ms = [m for (_, m), _ in model.atoms]
        logs = [math.log(abs(m)) if m != 0.0 else -math.inf for m in ms]
        mu = math.fsum(p * lg for p, lg in zip(probs, logs))
        if math.isfinite(mu):
            v2 = math.fsum(p * (lg - mu) ** 2 for p, lg in zip(probs, logs))
        else:
            v2 = math.inf
        return Moments(
            mu=mu,
            v2=v2,
            abs_mean_m=math.fsum(p * abs(m) for p, m in zip(probs, ms)),
            mean_m=math.fsum(p * m for p, m in zip(probs, ms)),
            mean_q=math.fsum(p * q for p, q in zip(probs, qs)),
            mean_q2=math.fsum(p * q * q for p, q in zip(probs, qs)),
            mean_qm=math.fsum(p * q * m for p, q, m in zip(probs, qs, ms)),
        )
    if isinstance(model, ScaledRademacher):
        mean_q, mean_q2 = model.q_law.moments()
        mean_m = model.rho * (2.0 * model.p - 1.0)
        return Moments(
            mu=math.log(model.rho),
            v2=0.0,
            abs_mean_m=model.rho,
            mean_m=mean_m,
            mean_q=mean_q,
            mean_q2=mean_q2,
            mean_qm=mean_q * mean_m,
        )
    if isinstance(model, LogNormalPair):
        mean_q, mean_q2 = model.q_law.moments()
        mean_m = math.exp(model.mu_x + 0.5 * model.v2)
        return Moments(
            mu=model.mu_x,
            v2=model.v2,
            abs_mean_m=mean_m,
            mean_m=mean_m,
            mean_q=mean_q,
            mean_q2=mean_q2,
            mean_qm=mean_q * mean_m,
        )
    if isinstance(model, SignedUnit):
        mean_q, mean_q2 = model.q_law.moments()
        mean_m = 2.0 * model.p_m - 1.0
        return Moments(
            mu=0.0,
            v2=0.0,
            abs_mean_m=1.0,
            mean_m=mean_m,
            mean_q=mean_q,
            mean_q2=mean_q2,
            mean_qm=mean_q * mean_m,
        )
    raise InvalidModelError(f"unknown model family {type(model).__name__}")


# ---------------------------------------------------------------------------
# Regime classification
# ---------------------------------------------------------------------------

CASE_IDS = (
    "I-sym",
    "I-asym",
    "II-abs",
    "II-signed",
    "III-clt",
    "III-evt",
    "III-boundary-growing",
    "III-boundary-vanishing",
    "IV",
    "CONVERGENT",
    "UNSUPPORTED",
)

_NORMALIZATIONS = {
    "I-sym": "r / rho^(n-1)",
    "I-asym": "r / rho^(n-1)",
    "II-abs": "|r|^(1/(v sqrt n)) / exp(mu sqrt n / v)",
    "II-signed": "sgn(r) |r|^(1/(v sqrt n)) / exp(mu sqrt n / v)",
    "III-clt": "|r|^(1/(v sqrt n))",
    "III-boundary-vanishing": "|r|^(1/(v sqrt n))",
    "III-evt": "|r|^(1/gamma_n)",
    "III-boundary-growing": "|r|^(1/gamma_n)",
    "IV": "r / sqrt n",
    "CONVERGENT": "none",
    "UNSUPPORTED": "none",
}


def _fmt(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class RegimeReport:
    """Classification outcome plus the parameters the pipeline needs."""

    case: str
    normalization: str
    limit: str
    mu: float
    v: float
    rho: float | None = None
    lam: float | None = None
    p: float | None = None
    beta2: float | None = None
    alpha: float | None = None
    note: str = ""


def _limit_label(case: str, lam=None, p=None, beta2=None, alpha=None) -> str:
    if case == "I-sym":
        return f"BernoulliConvolution({_fmt(lam)})"
    if case == "I-asym":
        return f"SymmetrizedPerpetuity({_fmt(lam)}, {_fmt(p)})"
    if case == "II-abs":
        return "LogNormalPositive"
    if case == "II-signed":
        return "LogNormalSymmetric"
    if case in ("III-clt", "III-boundary-vanishing"):
        return "ExpHalfNormal"
    if case in ("III-evt", "III-boundary-growing"):
        return f"ExpFrechet({_fmt(alpha)})"
    if case == "IV":
        return f"Gaussian({_fmt(beta2)})"
    return "none"


def _sign_mix(model: PairModel) -> tuple[bool, bool]:
    """(P(M > 0) > 0, P(M < 0) > 0)."""
    if isinstance(model, DiscreteJoint):
        has_pos = any(m > 0 and p > 0 for (_, m), p in model.atoms)
        has_neg = any(m < 0 and p > 0 for (_, m), p in model.atoms)
        return has_pos, has_neg
    if isinstance(model, (ScaledRademacher, SignedUnit)):
        return True, True
    if isinstance(model, LogNormalPair):
        return True, False
    raise InvalidModelError(f"unknown model family {type(model).__name__}")


def _m_constant(model: PairModel) -> bool:
    if isinstance(model, DiscreteJoint):
        ms = {m for (_, m), p in model.atoms if p > 0}
        return len(ms) == 1
    return False  # other families force a non-degenerate M at construction


def _abs_m_constant(model: PairModel) -> float | None:
    """rho when |M| is a.s. constant, else None."""
    if isinstance(model, ScaledRademacher):
        return model.rho
    if isinstance(model, SignedUnit):
        return 1.0
    if isinstance(model, DiscreteJoint):
        mags = {abs(m) for (_, m), p in model.atoms if p > 0}
        lo, hi = min(mags), max(mags)
        if hi - lo <= _ATOL * max(1.0, hi):
            return 0.5 * (lo + hi)
        return None
    return None


def _q_positive(model: PairModel) -> bool:
    if isinstance(model, DiscreteJoint):
        return all(q > 0 for (q, _), p in model.atoms if p > 0)
    return model.q_law.positive


def classify(moments: Moments, model: PairModel) -> RegimeReport:
    """Map exact moments to the applicable case, sub-case and limit."""
    if _m_constant(model):
        raise InvalidModelError(
            "M is a.s. constant; the recursion reduces to scaled i.i.d. sums "
            "and none of the renormalizations here apply"
        )
    mu, v2 = moments.mu, moments.v2
    v = math.sqrt(v2) if v2 > 0 else 0.0

    if mu < -_ATOL:
        return RegimeReport(
            case="CONVERGENT",
            normalization="none",
            limit="none",
            mu=mu,
            v=v,
            note="E ln|M| < 0: R_n converges in law; no renormalization needed",
        )

    if mu > _ATOL:
        rho = _abs_m_constant(model)
        if rho is not None:
            # Case I: |M| constant, sign random
            if isinstance(model, ScaledRademacher):
                p = model.p
            else:
                p = math.fsum(pr for (_, m), pr in model.atoms if m > 0)
            lam = 1.0 / rho
            case = "I-sym" if abs(p - 0.5) <= _ATOL else "I-asym"
            return RegimeReport(
                case=case,
                normalization=_NORMALIZATIONS[case],
                limit=_limit_label(case, lam=lam, p=p),
                mu=mu,
                v=0.0,
                rho=rho,
                lam=lam,
                p=p,
            )
        # Case II: |M| random
        has_pos, has_neg = _sign_mix(model)
        case = "II-signed" if (has_pos and has_neg) else "II-abs"
        return RegimeReport(
            case=case,
            normalization=_NORMALIZATIONS[case],
            limit=_limit_label(case),
            mu=mu,
            v=v,
        )

    # mu == 0 from here on
    if moments.abs_mean_m <= 1.0 + _ATOL:
        rho = _abs_m_constant(model)
        if rho is None or abs(rho - 1.0) > _ATOL:
            raise InvalidModelError(
                "E ln|M| = 0 with E|M| = 1 requires |M| = 1 a.s."
            )
        b2 = beta_squared(moments)
        return RegimeReport(
            case="IV",
            normalization=_NORMALIZATIONS["IV"],
            limit=_limit_label("IV", beta2=b2),
            mu=0.0,
            v=0.0,
            rho=1.0,
            beta2=b2,
        )

    has_pos, has_neg = _sign_mix(model)
    if has_neg:
        return RegimeReport(
            case="UNSUPPORTED",
            normalization="none",
            limit="none",
            mu=0.0,
            v=v,
            note=(
                "E ln|M| = 0 with E|M| > 1 and sign-mixing M has no known "
                "limit law; not supported"
            ),
        )
    if not _q_positive(model):
        return RegimeReport(
            case="UNSUPPORTED",
            normalization="none",
            limit="none",
            mu=0.0,
            v=v,
            note=(
                "the E ln|M| = 0, E|M| > 1 normalizations require Q > 0 "
                "(Q = e^Y); not supported for this Q"
            ),
        )

    # Case III: positive (Q, M) = (e^Y, e^X) with EX = 0; sub-case by Y tail
    if isinstance(model, LogNormalPair):
        q_law = model.q_law
    else:
        q_law = None  # DiscreteJoint: bounded Y, so EY^2 < infinity
    if isinstance(q_law, QLogPareto):
        if q_law.alpha == -2.0:
            return RegimeReport(
                case="UNSUPPORTED",
                normalization="none",
                limit="none",
                mu=0.0,
                v=v,
                note=(
                    "tail index -2 with a constant slowly-varying factor "
                    "has no known limit; declare ell growing or vanishing "
                    "via the log_boundary family"
                ),
            )
        case = "III-evt"
        alpha = q_law.alpha
    elif isinstance(q_law, QLogBoundary):
        case = f"III-boundary-{q_law.ell}"
        alpha = -2.0
    else:
        case = "III-clt"
        alpha = None
    return RegimeReport(
        case=case,
        normalization=_NORMALIZATIONS[case],
        limit=_limit_label(case, alpha=alpha),
        mu=0.0,
        v=v,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# Tail quantiles, the Case IV variance constant, sign-product gap
# ---------------------------------------------------------------------------


def tail_quantile(model: PairModel, n: int) -> float:
    """gamma_n = inf{t : P(Y > t) <= 1/n} for the declared Q tail.

    Closed form for the Pareto family; geometric bracketing plus
    bisection (1e-10 relative) for the boundary families.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    q_law = getattr(model, "q_law", None)
    if isinstance(q_law, QLogPareto):
        return q_law.tail_quantile(n)
    if isinstance(q_law, QLogBoundary):
        target = 1.0 / n
        if float(q_law.tail(q_law.t0)) <= target:
            return q_law.t0
        lo, hi = q_law.t0, 2.0 * q_law.t0
        while float(q_law.tail(hi)) > target:
            lo, hi = hi, hi * 2.0
        while hi - lo > 1e-10 * hi:
            mid = 0.5 * (lo + hi)
            if float(q_law.tail(mid)) > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    raise UnsupportedError(
        f"{type(model).__name__} declares no tail function for Q"
    )


def beta_squared(moments: Moments) -> float:
    """CLT variance EQ^2 + 2 EQ E(QM) / (1 - EM) for the |M| = 1 regime."""
    if abs(moments.abs_mean_m - 1.0) > _ATOL:
        raise DomainError("beta_squared requires E|M| = 1 (|M| = 1 a.s.)")
    if abs(1.0 - moments.mean_m) <= _ATOL:
        raise DomainError("beta_squared undefined at EM = 1")
    if not math.isfinite(moments.mean_q2):
        raise DomainError("beta_squared requires finite EQ^2")
    value = moments.mean_q2 + 2.0 * moments.mean_q * moments.mean_qm / (
        1.0 - moments.mean_m
    )
    if value < -1e-9:
        raise DomainError(f"inconsistent moments: beta^2 = {value} < 0")
    return max(value, 0.0)


def sign_gap(p: float, n: int) -> float:
    """P(prod eps_j = +1) - P(prod eps_j = -1) = (2p - 1)**n, exactly."""
    return (2.0 * p - 1.0) ** n
