"""Explicit lower-bound calculators for hitting times of PSM processes.

All bounds have the shape ``E[T] >= C·exp(K) - 1/2`` and
``Pr[T < L] <= C'·exp(-K)``; they are carried as logarithms so that
``exp(Θ(n))`` values stay representable. Threshold quantities that decide
admissibility (``b_tilde``, the floor defining ``b``) are evaluated with
50-digit arithmetic so that a boundary case cannot flip on rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .core import PreconditionError
from .mutation import MutationOperator, describe_operator, rate_distribution

GUARD = 1e-12
LOG_HALF = math.log(0.5)
_MP_DPS = 50


def _mp(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass
class BoundReport:
    """A lower bound on ``E[T]`` and an upper bound on ``Pr[T < L]``.

    ``log_expected_leading`` is the log of the term before the ``- 1/2``;
    ``log_prob_raw`` is the unclamped log of the probability bound.
    """

    kind: str
    log_expected_leading: float
    log_prob_raw: float
    inputs: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    @property
    def expected_time(self) -> float:
        if self.log_expected_leading > 709.0:
            return math.inf
        return math.exp(self.log_expected_leading) - 0.5

    @property
    def log_expected_time(self) -> float:
        """Log of the ``E[T]`` bound; ``-inf`` when the bound is not positive."""
        le = self.log_expected_leading
        if le <= LOG_HALF:
            return -math.inf
        return le + math.log1p(-0.5 * math.exp(-le))

    @property
    def log_prob(self) -> float:
        return min(0.0, self.log_prob_raw)

    @property
    def prob(self) -> float:
        return math.exp(self.log_prob)

    @property
    def log_evaluations(self) -> float:
        """Log of ``lam · E[T]`` (the fitness-evaluation bound), when ``lam`` is an input."""
        lam = self.inputs.get("lambda")
        if lam is None or self.log_expected_time == -math.inf:
            return -math.inf
        return math.log(lam) + self.log_expected_time

    @property
    def evaluations(self) -> float:
        lam = self.inputs.get("lambda")
        if lam is None:
            return math.nan
        le = self.log_evaluations
        return 0.0 if le == -math.inf else (math.inf if le > 709 else math.exp(le))

    def to_record(self) -> dict:
        rec = {"bound": self.kind}
        rec.update(self.inputs)
        rec.update(self.constants)
        rec.update({
            "log_expected_time_leading": self.log_expected_leading,
            "log_expected_time": self.log_expected_time,
            "expected_time": self.expected_time,
        })
        if "lambda" in self.inputs:
            rec["log_evaluations"] = self.log_evaluations
            rec["evaluations"] = self.evaluations
        rec.update({
            "log_prob_bound_raw": self.log_prob_raw,
            "log_prob_bound": self.log_prob,
            "prob_bound": self.prob,
        })
        return rec


def _log_linear(L: int) -> float:
    return math.log(L) if L > 0 else -math.inf


def _check_int(name, v, lo=0):
    if int(v) != v or v < lo:
        raise PreconditionError(f"{name} must be an integer >= {lo}, got {v}")


def _check_rate(p, what="mutation rate"):
    if not 0 <= p <= 0.5:
        raise PreconditionError(f"{what} must lie in [0, 1/2], got {p}")


def negdrift_lemma_bounds(delta: float, Delta: float, M: float, L: int) -> BoundReport:
    """Negative multiplicative drift: ``E[T] >= δM/(2Δ) - 1/2``, ``Pr[T<L] <= LΔ/(δM)``."""
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if Delta <= 0:
        raise PreconditionError(f"Delta must be positive, got {Delta}")
    _check_int("L", L)
    if M <= Delta / delta:
        raise PreconditionError(f"M={M} must exceed Delta/delta={Delta / delta}")
    ratio = math.log(delta) + math.log(M) - math.log(Delta)
    return BoundReport(
        "lemma1",
        log_expected_leading=ratio - math.log(2),
        log_prob_raw=_log_linear(L) - ratio,
        inputs={"delta": delta, "Delta": Delta, "M": M, "L": L},
        constants={"drift_fixed_point": Delta / delta},
    )


def populations_bounds(kappa: float, a: int, b: int, alpha: float, delta: float, D: float,
                       lam: int, L: int) -> BoundReport:
    """Bounds for a PSM process whose three drift conditions hold with these constants."""
    if kappa <= 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")
    _check_int("a", a)
    _check_int("b", b)
    if a > b:
        raise PreconditionError(f"need a <= b, got a={a}, b={b}")
    if alpha < 1:
        raise PreconditionError(f"alpha must be at least 1, got {alpha}")
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if D < delta:
        raise PreconditionError(f"need D >= delta, got D={D}, delta={delta}")
    _check_int("lambda", lam, 1)
    _check_int("L", L)
    K = kappa * (b - a)
    log_c = math.log(delta) - math.log(D) - math.log(lam)
    return BoundReport(
        "psm",
        log_expected_leading=log_c - math.log(2) + K,
        log_prob_raw=_log_linear(L) - log_c - K,
        inputs={"kappa": kappa, "a": a, "b": b, "alpha": alpha, "delta": delta, "D": D,
                "lambda": lam, "L": L},
        constants={"Delta": lam * D * math.exp(-kappa * b), "M": math.exp(-kappa * a)},
    )


def check_start_condition(n: int, kappa: float, b: int, D: float, delta: float,
                          lam: int) -> tuple[bool, float]:
    """Is ``λ(1/2 + e^{-κ}/2)^n <= λ D e^{-κb}/δ``? Returns (verdict, log of rhs/lhs)."""
    if math.exp(kappa) < 2 * (1 - GUARD):
        raise PreconditionError(f"need kappa = ln B with B >= 2, got B={math.exp(kappa)}")
    log_lhs = math.log(lam) + n * math.log(0.5 + 0.5 * math.exp(-kappa))
    log_rhs = math.log(lam) + math.log(D) - kappa * b - math.log(delta)
    margin = log_rhs - log_lhs
    return margin >= 0, margin


@dataclass(frozen=True)
class SbmConstants:
    epsilon: float
    B: float
    b_tilde: float
    kappa: float
    D: float


def sbm_constants(n: int, p, alpha: float, delta: float) -> tuple[SbmConstants, mpmath.mpf]:
    with mpmath.workdps(_MP_DPS):
        eps = 1 - mpmath.log(_mp(alpha) / (1 - _mp(delta))) / (_mp(p) * n)
        if eps <= 0:
            raise PreconditionError(
                f"epsilon = {float(eps):.6g} <= 0: need ln(alpha/(1-delta)) < p n")
        B = 2 / eps
        b_tilde = n / (B * B - 1)
        D = max((1 - delta) / alpha, delta)
        return SbmConstants(float(eps), float(B), float(b_tilde), float(mpmath.log(B)), D), b_tilde


def _drift_bound_report(kind, log_B, lam, L, delta, alpha, a, b, inputs, constants):
    lead = min(delta * alpha / (1 - delta), 1.0)
    factor = max((1 - delta) / (delta * alpha), 1.0)
    K = log_B * (b - a)
    return BoundReport(
        kind,
        log_expected_leading=math.log(lead) - math.log(2 * lam) + K,
        log_prob_raw=_log_linear(L) + math.log(lam) + math.log(factor) - K,
        inputs=inputs,
        constants={**constants, "min_factor": lead, "max_factor": factor},
    )


def sbm_bounds(n: int, p, alpha: float, delta: float, a: int, b: int, lam: int,
               L: int) -> BoundReport:
    """Bounds for standard bit mutation with rate ``p`` and Hamming potential."""
    _check_int("n", n, 1)
    _check_rate(float(p))
    if p <= 0:
        raise PreconditionError("mutation rate must be positive")
    if alpha < 1:
        raise PreconditionError(f"alpha must be at least 1, got {alpha}")
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    _check_int("a", a)
    _check_int("b", b)
    _check_int("lambda", lam, 1)
    _check_int("L", L)
    if not a < b:
        raise PreconditionError(f"need a < b, got a={a}, b={b}")
    c, b_tilde = sbm_constants(n, p, alpha, delta)
    if b > b_tilde:
        raise PreconditionError(f"b exceeds b_tilde: b={b} > b_tilde={c.b_tilde:.6g}")
    return _drift_bound_report(
        "sbm", c.kappa, lam, L, delta, alpha, a, b,
        inputs={"n": n, "p": float(p), "alpha": alpha, "delta": delta, "a": a, "b": b,
                "lambda": lam, "L": L},
        constants={"epsilon": c.epsilon, "B": c.B, "b_tilde": c.b_tilde, "kappa": c.kappa,
                   "D": c.D},
    )


def corollary_b(n: int, gamma) -> int:
    """``⌊(1 - 4/n) n / (4/γ² - 1)⌋``."""
    with mpmath.workdps(_MP_DPS):
        g = _mp(gamma)
        return int(mpmath.floor((1 - mpmath.mpf(4) / n) * n / (4 / (g * g) - 1)))


def corollary_gamma(n: int, p, alpha: float):
    with mpmath.workdps(_MP_DPS):
        return 1 - mpmath.log(_mp(alpha)) / (_mp(p) * n)


def sbm_corollary_bounds(n: int, p, alpha: float, a: int, lam: int, L: int) -> BoundReport:
    """The δ-free version: ``δ = p/(2n)`` internally, ``b`` fixed by ``γ``."""
    _check_int("n", n, 1)
    _check_rate(float(p))
    if p <= 0:
        raise PreconditionError("mutation rate must be positive")
    if alpha < 1:
        raise PreconditionError(f"alpha must be at least 1, got {alpha}")
    _check_int("a", a)
    _check_int("lambda", lam, 1)
    _check_int("L", L)
    gamma_mp = corollary_gamma(n, p, alpha)
    if gamma_mp < mpmath.mpf(1) / n:
        raise PreconditionError(
            f"gamma = {float(gamma_mp):.6g} < 1/n: need ln(alpha) <= p (n-1)")
    b = corollary_b(n, gamma_mp)
    if a > b:
        raise PreconditionError(f"need a <= b, got a={a}, b={b}")
    gamma = float(gamma_mp)
    p = float(p)
    pa = p * alpha
    K = math.log(2 / gamma) * (b - a)
    lead = pa / (4 * lam * n) * min(1.0, 2 * n / pa)
    factor = 2 * lam * n / pa * max(1.0, pa / (2 * n))
    return BoundReport(
        "corollary",
        log_expected_leading=math.log(lead) + K,
        log_prob_raw=_log_linear(L) + math.log(factor) - K,
        inputs={"n": n, "p": p, "alpha": alpha, "a": a, "lambda": lam, "L": L},
        constants={"gamma": gamma, "b": b, "delta": p / (2 * n),
                   "kappa": math.log(2 / gamma)},
    )


def max_horizon(report: BoundReport, target: float) -> int:
    """Largest ``L >= 0`` for which the report's ``Pr[T < L]`` bound stays ``<= target``.

    Every probability bound here is linear in ``L``.
    """
    L = report.inputs["L"]
    if L == 0:
        raise ValueError("report must be computed with L >= 1")
    log_per_step = report.log_prob_raw - math.log(L)
    return max(0, math.floor(math.exp(math.log(target) - log_per_step) * (1 + GUARD)))


def rate_sum(op: MutationOperator, n: int, B: float) -> float:
    """``Σ q_i exp(-p_i n (1 - 2/B))``, the admissibility sum for ``B``."""
    dist = rate_distribution(op, n)
    return float(np.dot(dist.probs, np.exp(-dist.support * n * (1 - 2 / B))))


def mixed_bounds(n: int, op: MutationOperator, alpha: float, delta: float, B: float,
                 a: int, b: int, lam: int, L: int) -> BoundReport:
    """Bounds for standard bit mutation with a random rate, for a given admissible ``B``."""
    _check_int("n", n, 1)
    if alpha < 1:
        raise PreconditionError(f"alpha must be at least 1, got {alpha}")
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if not B > 2:
        raise PreconditionError(f"B must exceed 2, got {B}")
    _check_int("a", a)
    _check_int("b", b)
    _check_int("lambda", lam, 1)
    _check_int("L", L)
    if not a < b:
        raise PreconditionError(f"need a < b, got a={a}, b={b}")
    dist = rate_distribution(op, n)
    if dist.support.max() > 0.5:
        raise PreconditionError(f"all mutation rates must be <= 1/2, got {dist.support.max()}")
    lhs = rate_sum(op, n, B)
    rhs = (1 - delta) / alpha
    if lhs > rhs * (1 + GUARD):
        raise PreconditionError(f"B inadmissible: rate sum {lhs:.12g} > (1-delta)/alpha = {rhs:.12g}")
    with mpmath.workdps(_MP_DPS):
        b_tilde_mp = n / (_mp(B) ** 2 - 1)
    b_tilde = float(b_tilde_mp)
    if b > b_tilde_mp:
        raise PreconditionError(f"b exceeds b_tilde: b={b} > b_tilde={b_tilde:.6g}")
    return _drift_bound_report(
        "mixed", math.log(B), lam, L, delta, alpha, a, b,
        inputs={"n": n, "alpha": alpha, "delta": delta, "B": B, "a": a, "b": b, "lambda": lam,
                "L": L, "mutation": describe_operator(op)},
        constants={"B": B, "b_tilde": b_tilde, "kappa": math.log(B),
                   "D": max(rhs, delta), "rate_sum": lhs, "rate_sum_cap": rhs},
    )


def mixed_params_from_gamma(alpha: float, gamma: float) -> tuple[float, float]:
    """``(δ, B)`` admissible whenever ``Σ q_i e^{-p_i n} <= (1-γ)/α``."""
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if alpha < 1:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    eps = 1 - math.log((1 - gamma / 2) / alpha) / math.log((1 - gamma) / alpha)
    return gamma / 2, 2 / eps


@dataclass(frozen=True)
class SimpleGaParameters:
    n: int
    alpha: float
    gamma: float
    b: int
    s: float

    @property
    def b_over_n(self) -> float:
        return self.b / self.n


def simple_ga_parameters(n: int, eps: float, a_frac: float) -> SimpleGaParameters:
    """Constants for the simple GA on OneMax with fitness floor ``s = (1/2 - eps) n``.

    ``a_frac`` is the target distance as a fraction of ``n``; the reproduction
    rate of an individual below the target is then at most ``alpha``.
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if not 0 < a_frac < 0.5 - eps:
        raise ValueError(f"a_frac must lie in (0, 1/2 - eps), got {a_frac}")
    alpha = (1 - a_frac) / (0.5 - eps)
    gamma = corollary_gamma(n, Fraction(1, n), alpha)
    if gamma <= 0:
        raise PreconditionError(f"alpha = {alpha:.6g} >= e gives gamma <= 0")
    if gamma < mpmath.mpf(1) / n:
        raise PreconditionError(f"gamma = {float(gamma):.6g} < 1/n")
    return SimpleGaParameters(n, alpha, float(gamma), corollary_b(n, gamma), (0.5 - eps) * n)
