"""Mutation operators and their exact analytic companions.

Three operators are supported: standard bit mutation with a fixed rate,
a finite mixture of rates (the uniform-mixing hyper-heuristic), and the
heavy-tailed operator whose rate ``i/n`` has ``i`` power-law distributed
on ``[1..N]``. Mixed and heavy-tailed operators draw a fresh rate on
every application.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import BitString

SUM_TOL = 1e-12


@dataclass(frozen=True)
class FixedRate:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"mutation rate must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class MixedRate:
    """Rate ``rates[i][0]`` is used with probability ``rates[i][1]``."""

    rates: tuple[tuple[float, float], ...]

    def __post_init__(self):
        rates = tuple((float(p), float(q)) for p, q in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise ValueError("need at least one rate")
        for p, q in rates:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"mutation rate must lie in [0, 1], got {p}")
            if q < 0:
                raise ValueError(f"negative rate weight {q}")
        total = sum(q for _, q in rates)
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"rate weights sum to {total!r}, not 1")


@dataclass(frozen=True)
class HeavyTailed:
    """Power-law rate ``i/n``, ``Pr[i] ∝ i^-beta`` on ``[1..N]``; ``N=None`` means ``n // 2``."""

    beta: float = 1.5
    N: int | None = None

    def __post_init__(self):
        if self.beta <= 1:
            raise ValueError(f"beta must exceed 1, got {self.beta}")
        if self.N is not None and self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")

    def resolved_N(self, n: int) -> int:
        N = n // 2 if self.N is None else self.N
        if N < 1:
            raise ValueError(f"heavy-tailed operator needs N >= 1 (n={n})")
        return N


MutationOperator = Union[FixedRate, MixedRate, HeavyTailed]


@dataclass(frozen=True)
class RatePmf:
    """A finite distribution over ``support`` (rate indices or rates)."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.support.shape != self.probs.shape:
            raise ValueError("support and probabilities differ in shape")
        if (self.probs < 0).any() or abs(self.probs.sum() - 1.0) > SUM_TOL:
            raise ValueError("probabilities must be non-negative and sum to 1")

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def draw_index(self, rng: np.random.Generator, size=None):
        """Index into ``support`` via inverse-CDF binary search."""
        return np.searchsorted(self.cdf, rng.random(size), side="right")


def heavy_tailed_pmf(beta: float, N: int) -> RatePmf:
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    if beta <= 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    i = np.arange(1, N + 1, dtype=float)
    w = i ** (-beta)
    return RatePmf(np.arange(1, N + 1), w / w.sum())


def rate_distribution(op: MutationOperator, n: int) -> RatePmf:
    """Expand any operator into the distribution of its per-call bit-flip rate."""
    if isinstance(op, FixedRate):
        return RatePmf(np.array([op.p]), np.array([1.0]))
    if isinstance(op, MixedRate):
        p, q = (np.array(c, dtype=float) for c in zip(*op.rates))
        return RatePmf(p, q / q.sum())
    if isinstance(op, HeavyTailed):
        pmf = heavy_tailed_pmf(op.beta, op.resolved_N(n))
        return RatePmf(pmf.support / n, pmf.probs)
    raise TypeError(f"unknown mutation operator {op!r}")


def draw_rates(op: MutationOperator, n: int, rng: np.random.Generator, size) -> np.ndarray:
    if isinstance(op, FixedRate):
        return np.full(size, op.p)
    dist = rate_distribution(op, n)
    return dist.support[dist.draw_index(rng, size)]


def mutate_array(bits: np.ndarray, op: MutationOperator, rng: np.random.Generator) -> np.ndarray:
    """Mutate every row of a ``(..., n)`` 0/1 array independently.

    One rate is drawn per row, then each bit of that row flips with it.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    rates = draw_rates(op, n, rng, bits.shape[:-1])
    flips = rng.random(bits.shape) < rates[..., None]
    return bits ^ flips.astype(np.uint8)


def mutate(x: BitString, op: MutationOperator, rng: np.random.Generator) -> BitString:
    return BitString.from_array(mutate_array(x.to_array()[None, :], op, rng)[0])


def binomial_pmf(m: int, p: float) -> np.ndarray:
    """Binomial(m, p) pmf via a running product of term ratios, in log form."""
    if m == 0:
        return np.ones(1)
    if p <= 0.0:
        out = np.zeros(m + 1)
        out[0] = 1.0
        return out
    if p >= 1.0:
        out = np.zeros(m + 1)
        out[m] = 1.0
        return out
    k = np.arange(m, dtype=float)
    steps = np.log(m - k) - np.log(k + 1) + math.log(p) - math.log1p(-p)
    logpmf = m * math.log1p(-p) + np.concatenate(([0.0], np.cumsum(steps)))
    pmf = np.exp(logpmf - logpmf.max())
    return pmf / pmf.sum()


def offspring_distance_pmf(d: int, n: int, p: float) -> np.ndarray:
    """Distribution over ``[0..n]`` of ``H(mut(x), x*)`` given ``H(x, x*) = d``."""
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got d={d}, n={n}")
    closer = binomial_pmf(d, p)[::-1]  # index u = d - (bits fixed)
    farther = binomial_pmf(n - d, p)
    return np.convolve(closer, farther)


def log_mgf_sbm(d: int, n: int, p: float, kappa: float) -> float:
    """``ln E[exp(-κ (g(y) - g(x)))]`` for standard bit mutation at distance ``d``."""
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got d={d}, n={n}")
    up = math.log1p(p * math.expm1(kappa)) if d else 0.0
    down = math.log1p(p * math.expm1(-kappa)) if n - d else 0.0
    return d * up + (n - d) * down


def mgf_sbm(d: int, n: int, p: float, kappa: float) -> float:
    return math.exp(log_mgf_sbm(d, n, p, kappa))


def log_mgf_mixed(d: int, n: int, op: MutationOperator, kappa: float) -> float:
    dist = rate_distribution(op, n)
    keep = dist.probs > 0
    terms = np.array([log_mgf_sbm(d, n, float(p), kappa) for p in dist.support[keep]])
    terms += np.log(dist.probs[keep])
    top = terms.max()
    return float(top + np.log(np.exp(terms - top).sum()))


def mgf_mixed(d: int, n: int, op: MutationOperator, kappa: float) -> float:
    """Convex combination ``Σ q_i · mgf_sbm(d, n, p_i, κ)``."""
    return math.exp(log_mgf_mixed(d, n, op, kappa))


def a_constant(beta: float, N: int) -> float:
    """``A_N = Σ_{i≤N} Pr[i] e^{-i}`` for the power law on ``[1..N]``.

    This is the probability that the heavy-tailed operator returns an
    unchanged copy, in the large-``n`` limit.
    """
    pmf = heavy_tailed_pmf(beta, N)
    # terms beyond i ~ 750 underflow to 0 and contribute nothing anyway
    return float(np.dot(pmf.probs, np.exp(-pmf.support.astype(float))))


def zeta_bracket(beta: float, terms: int = 10_000) -> tuple[float, float]:
    """Bounds on ``Σ_{i≥1} i^-beta`` from a partial sum plus integral tail bounds."""
    if beta <= 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    partial = float(np.sum(np.arange(1, terms + 1, dtype=float) ** (-beta)))
    lower = partial + (terms + 1) ** (1 - beta) / (beta - 1)
    upper = partial + terms ** (1 - beta) / (beta - 1)
    return lower, upper


def a_limit_bracket(beta: float, head: int = 100, terms: int = 10_000) -> tuple[float, float]:
    """Bracket ``[A^-, A^+]`` for ``lim_N A_N``.

    ``A^-`` keeps the first ``head`` terms with the infinite normaliser;
    ``A^+`` adds ``e^{-(head+1)}`` for the rest. The normaliser is only
    known up to :func:`zeta_bracket`, which widens the bracket accordingly.
    """
    z_lo, z_hi = zeta_bracket(beta, terms)
    i = np.arange(1, head + 1, dtype=float)
    s = float(np.dot(i ** (-beta), np.exp(-i)))
    return s / z_hi, s / z_lo + math.exp(-(head + 1))


def describe_operator(op: MutationOperator) -> str:
    if isinstance(op, FixedRate):
        return f"fixed:{op.p!r}"
    if isinstance(op, MixedRate):
        return "mixed:" + ",".join(f"{p!r}@{q!r}" for p, q in op.rates)
    if isinstance(op, HeavyTailed):
        return f"heavy:{op.beta!r}" + ("" if op.N is None else f":{op.N}")
    raise TypeError(f"unknown mutation operator {op!r}")


def parse_operator(text: str) -> MutationOperator:
    """Inverse of :func:`describe_operator`; ``p`` may be written as ``1/n`` fractions."""
    kind, _, rest = text.partition(":")
    if kind == "fixed":
        return FixedRate(float(Fraction(rest)))
    if kind == "mixed":
        rates = []
        for part in rest.split(","):
            p, _, q = part.partition("@")
            rates.append((float(Fraction(p)), float(Fraction(q))))
        return MixedRate(tuple(rates))
    if kind == "heavy":
        beta, _, N = rest.partition(":")
        return HeavyTailed(float(beta or 1.5), int(N) if N else None)
    raise ValueError(f"unknown mutation operator spec {text!r}")
