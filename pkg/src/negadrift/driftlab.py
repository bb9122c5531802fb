"""Verification laboratory: exact chain oracles, drift-condition checkers and
stochastic-domination tests.

Note on population fitness sums: individual fitness in the simple GA
dominates a uniform random point, but the *sum* over the population does
not dominate ``Bin(mu n, 1/2)``. The separating event has probability
about ``(20n)^-n``, so no test here tries to observe it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Population, logsumexp_neg
from .engine import PsmProcess, simulate_batch, step_batch
from .mutation import (FixedRate, MutationOperator, binomial_pmf, log_mgf_mixed,
                       offspring_distance_pmf, rate_distribution)
from .selection import fp_probabilities, reproduction_rates

ROW_TOL = 1e-12
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class FiniteChain:
    """Markov chain on states ``0..S-1`` with non-negative labels ``X(s)``.

    ``T`` is the first time the label reaches ``M``.
    """

    labels: np.ndarray
    P: np.ndarray
    M: float
    start: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=float)
        P = np.asarray(self.P, dtype=float)
        start = np.asarray(self.start, dtype=float)
        S = len(labels)
        if P.shape != (S, S) or start.shape != (S,):
            raise ValueError("transition matrix / start vector do not match the labels")
        if not np.isfinite(labels).all() or (labels < 0).any():
            raise ValueError("labels must be finite and non-negative")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > ROW_TOL:
            raise ValueError("transition rows must be non-negative and sum to 1")
        if (start < 0).any() or abs(start.sum() - 1) > ROW_TOL:
            raise ValueError("start distribution must sum to 1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "start", start)

    @property
    def target(self) -> np.ndarray:
        return self.labels >= self.M


@dataclass(frozen=True)
class DriftCertificate:
    """Constants of an admissible pointwise drift ``E[X'|X] <= (1-δ)X + Δ``.

    ``Delta`` also covers the start condition ``E[X_0] <= Δ/δ``;
    ``pointwise_Delta`` is the part forced by the transitions alone.
    """

    delta: float
    Delta: float
    pointwise_Delta: float
    M: float

    @property
    def fixed_point(self) -> float:
        return self.Delta / self.delta

    @property
    def accepted(self) -> bool:
        return self.M > self.fixed_point


def pointwise_excess(chain: FiniteChain, delta: float) -> np.ndarray:
    """``E[X'|s] - (1-δ) X(s)`` for every state."""
    return chain.P @ chain.labels - (1 - delta) * chain.labels


def chain_drift_check(chain: FiniteChain, grid: Sequence[float] | None = None
                      ) -> DriftCertificate | None:
    """Search δ for the admissible pair with the smallest ``Δ/δ``.

    The grid is logarithmic in ``(0, 1)`` plus the per-state breakpoints
    ``1 - E[X'|s]/X(s)``. Returns ``None`` when no grid point yields
    ``Δ/δ < M``.
    """
    x = chain.labels
    mean_next = chain.P @ x
    if grid is None:
        grid = list(np.geomspace(1e-6, 1 - 1e-9, 400))
        with np.errstate(divide="ignore", invalid="ignore"):
            brk = 1 - mean_next / x
        grid += [float(d) for d in brk[np.isfinite(brk)] if 0 < d < 1]
    start_mean = float(chain.start @ x)
    best = None
    for d in sorted(set(grid)):
        if not 0 < d < 1:
            continue
        pw = max(0.0, float((mean_next - (1 - d) * x).max()))
        Delta = max(pw, d * start_mean)
        key = (Delta / d, -d)
        if best is None or key < best[0]:
            best = (key, DriftCertificate(d, Delta, pw, chain.M))
    if best is None or not best[1].accepted:
        return None
    return best[1]


@dataclass
class HittingResult:
    """Exact hitting-time quantities for ``T = min{t >= 0 : X_t >= M}``.

    ``prob_before[L]`` is ``Pr[T < L]`` for ``L = 0..horizon``.
    ``expected_T`` is exact unless ``truncated`` is set, in which case it
    is the lower bound ``Σ_{t=1}^{horizon} Pr[T >= t]``.
    """

    prob_before: np.ndarray
    expected_T: float
    truncated: bool


def absorbed_matrix(chain: FiniteChain) -> np.ndarray:
    P = chain.P.copy()
    tgt = chain.target
    P[tgt] = 0.0
    P[tgt, tgt] = 1.0
    return P


def chain_exact_hitting(chain: FiniteChain, L: int) -> HittingResult:
    S = len(chain.labels)
    if S > 10_000:
        raise ValueError("chain too large for the exact oracle")
    tgt = chain.target
    P = absorbed_matrix(chain)
    prob = np.zeros(L + 1)
    dist = chain.start.copy()
    for t in range(L):
        prob[t + 1] = dist[tgt].sum()
        dist = dist @ P
    prob = np.minimum(prob, 1.0)

    trans = ~tgt
    # states that can never reach the target make E[T] infinite
    reach = tgt.copy()
    adj = chain.P > 0
    while True:
        new = reach | (adj[:, reach].any(axis=1))
        if (new == reach).all():
            break
        reach = new
    if (chain.start[~reach] > 0).any():
        return HittingResult(prob, math.inf, False)
    idx = np.flatnonzero(trans & reach)
    if idx.size == 0:
        return HittingResult(prob, 0.0, False)
    Q = chain.P[np.ix_(idx, idx)]
    try:
        steps = np.linalg.solve(np.eye(idx.size) - Q, np.ones(idx.size))
    except np.linalg.LinAlgError:
        return HittingResult(prob, float(np.sum(1 - prob[1:])), True)
    return HittingResult(prob, float(chain.start[idx] @ steps), False)


def expected_labels(chain: FiniteChain, steps: int) -> np.ndarray:
    """``E[X_t]`` for ``t = 0..steps`` under the original (non-absorbed) chain."""
    out = np.empty(steps + 1)
    dist = chain.start.copy()
    for t in range(steps + 1):
        out[t] = dist @ chain.labels
        dist = dist @ chain.P
    return out


def random_drift_chain(rng: np.random.Generator, states: int | None = None) -> FiniteChain:
    """A random chain whose labels grow geometrically and whose moves lean downward.

    Roughly mimics the exponential potential of a distance process; many
    but not all such chains admit a drift certificate.
    """
    S = int(rng.integers(3, 31)) if states is None else states
    base = rng.uniform(1.5, 4.0)
    labels = base ** np.arange(S) - 1 + rng.uniform(0, 0.5, S) * (np.arange(S) > 0)
    labels = np.sort(labels)
    down_bias = rng.uniform(1.0, 6.0)
    P = np.zeros((S, S))
    for s in range(S):
        offsets = np.arange(S) - s
        w = np.exp(-np.abs(offsets) * rng.uniform(0.5, 2.0)) * np.where(offsets < 0, down_bias, 1.0)
        w *= rng.dirichlet(np.ones(S)) * S
        P[s] = w / w.sum()
    k = int(rng.integers(max(1, S // 2), S))
    M = float(labels[k])
    start = np.zeros(S)
    start[: max(1, k // 2)] = rng.dirichlet(np.ones(max(1, k // 2)))
    return FiniteChain(labels, P, M, start)


def distance_chain(n: int, op: MutationOperator, kappa: float, a: int,
                   start: np.ndarray | None = None) -> FiniteChain:
    """Hamming distance of a (1,1) process as a chain on ``0..n``.

    Labels are ``exp(-κ d)`` and ``M = exp(-κ a)``, so hitting ``M`` means
    reaching distance ``a`` or less. Defaults to a uniformly random start.
    """
    dist = rate_distribution(op, n)
    P = np.zeros((n + 1, n + 1))
    for p, q in zip(dist.support, dist.probs):
        P += q * np.stack([offspring_distance_pmf(d, n, float(p)) for d in range(n + 1)])
    P /= P.sum(axis=1, keepdims=True)
    labels = np.exp(-kappa * np.arange(n + 1))
    if start is None:
        start = binomial_pmf(n, 0.5)
    return FiniteChain(labels, P, math.exp(-kappa * a) * (1 - 1e-12), start)


@dataclass
class LevelReport:
    """Per-distance check of ``E[e^{-κ(g(y)-g(x))}] <= (1-δ)/α``."""

    levels: list[int]
    lhs: list[float]
    rhs: float
    passed: bool
    tightest_level: int | None
    tightest_ratio: float

    def to_record(self) -> dict:
        return {"check": "condition_ii", "levels": len(self.levels), "rhs": self.rhs,
                "passed": self.passed, "tightest_level": self.tightest_level,
                "tightest_ratio": self.tightest_ratio}


def verify_condition_ii(op: MutationOperator, n: int, kappa: float, alpha: float,
                        delta: float, a: int, b: int) -> LevelReport:
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    rhs = (1 - delta) / alpha
    levels = list(range(max(a + 1, 0), min(b, n + 1)))
    log_lhs = [log_mgf_mixed(d, n, op, kappa) for d in levels]
    lhs = [math.exp(v) for v in log_lhs]
    if not levels:
        return LevelReport([], [], rhs, True, None, -math.inf)
    ratios = [v - math.log(rhs) for v in log_lhs]
    worst = int(np.argmax(ratios))
    return LevelReport(levels, lhs, rhs, max(ratios) <= EXACT_TOL, levels[worst],
                       math.exp(ratios[worst]))


@dataclass
class ConditionIIIReport:
    """Check of ``E[e^{-κ g(y)}] <= D e^{-κ b}`` for all parents at distance ``>= b``.

    ``normalized_lhs`` is the worst left side times ``e^{κ b}``.
    """

    holds: bool
    worst_level: int
    normalized_lhs: float
    D: float
    exhaustive: bool

    def to_record(self) -> dict:
        return {"check": "condition_iii", **asdict(self)}


def verify_condition_iii(op: MutationOperator, n: int, kappa: float, b: int, D: float,
                         exhaustive_limit: int = 1000) -> ConditionIIIReport:
    """Exact over ``d ∈ [b..n]`` for ``n <= exhaustive_limit``; else only ``d = b``.

    The reduction to ``d = b`` is valid because the offspring distance is
    stochastically increasing in the parent distance for rates ``<= 1/2``.
    """
    levels = range(b, n + 1) if n <= exhaustive_limit else [b]
    # ln(e^{-κd} mgf(d)) + κb
    vals = [kappa * (b - d) + log_mgf_mixed(d, n, op, kappa) for d in levels]
    worst = int(np.argmax(vals))
    lhs = math.exp(vals[worst])
    return ConditionIIIReport(vals[worst] <= math.log(D) + EXACT_TOL, list(levels)[worst], lhs, D,
                              n <= exhaustive_limit)


def expected_next_potential(proc: PsmProcess, P: Population, kappa: float) -> float:
    """Exact ``E[Σ_j exp(-κ g(P'_j)) | P]`` with Hamming potential.

    Uses ``Σ_i E[R(i,P)] · E[exp(-κ g(mut(P_i)))]``.
    """
    g = proc.potential.evaluate(P.matrix)
    rates = reproduction_rates(proc.evaluate(P.matrix), proc.selection)
    per = np.array([-kappa * d + log_mgf_mixed(int(d), proc.n, proc.mutation, kappa) for d in g])
    return float(np.dot(rates, np.exp(per)))


@dataclass
class DriftMeasurement:
    mean: float
    half_width: float
    current: float
    reps: int


def measure_drift(proc: PsmProcess, P: Population, kappa: float, reps: int,
                  rng: np.random.Generator) -> DriftMeasurement:
    """Monte Carlo ``E[X_{t+1} | P_t = P]`` for ``X = Σ exp(-κ g)``, with a 95% half-width."""
    if reps < 100:
        raise ValueError("reps must be at least 100")
    bits = np.broadcast_to(P.matrix, (reps, P.lam, P.n))
    nxt = step_batch(np.array(bits), proc, rng)
    g = proc.potential.evaluate(nxt)
    x = np.exp(-kappa * g.astype(float)).sum(axis=1)
    current = math.exp(logsumexp_neg(kappa, proc.potential.evaluate(P.matrix)))
    return DriftMeasurement(float(x.mean()), 1.96 * float(x.std(ddof=1)) / math.sqrt(reps),
                            current, reps)


def drift_right_side(current: float, delta: float, D: float, lam: int, kappa: float,
                     b: int) -> float:
    """``(1-δ) X + λ D e^{-κ b}``."""
    return (1 - delta) * current + lam * D * math.exp(-kappa * b)


@dataclass
class DominationVerdict:
    """Outcome of checking ``low ⪯ high``.

    ``gap`` is ``max_t (F_high(t) - F_low(t))`` (exact) or the same with
    the empirical CDF minus the DKW slack (statistical); ``location`` is
    the support point where it is attained.
    """

    holds: bool
    gap: float
    location: int
    method: str
    significance: float | None = None

    def to_record(self) -> dict:
        return {"check": "domination", **asdict(self)}


def domination_test_exact(pmf_low, pmf_high) -> DominationVerdict:
    """Does ``high`` stochastically dominate ``low`` on the common support ``0..K``?"""
    lo = np.asarray(pmf_low, dtype=float)
    hi = np.asarray(pmf_high, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError(f"pmfs must share one support, got shapes {lo.shape} and {hi.shape}")
    diff = np.cumsum(hi) - np.cumsum(lo)
    loc = int(np.argmax(diff))
    gap = float(diff[loc])
    holds = gap <= EXACT_TOL
    return DominationVerdict(holds, 0.0 if holds and gap > 0 else gap, loc, "exact")


def dkw_slack(samples: int, significance: float) -> float:
    """One-sided DKW: ``Pr[sup(F_n - F) > s] <= exp(-2 n s^2)``."""
    return math.sqrt(math.log(1 / significance) / (2 * samples))


def domination_test_statistical(samples, reference_cdf, significance: float) -> DominationVerdict:
    """Check that the sample law dominates the reference up to the DKW slack.

    ``reference_cdf`` is an array over ``0..K`` or a callable on integers.
    """
    x = np.asarray(samples, dtype=np.int64)
    if x.size == 0:
        raise ValueError("need at least one sample")
    if not 0 < significance <= 0.1:
        raise ValueError(f"significance must lie in (0, 0.1], got {significance}")
    top = int(max(x.max(), 0))
    if callable(reference_cdf):
        K = top
        ref = np.array([reference_cdf(k) for k in range(K + 1)], dtype=float)
    else:
        ref = np.asarray(reference_cdf, dtype=float)
        K = len(ref) - 1
    support = np.arange(K + 1)
    emp = np.searchsorted(np.sort(x), support, side="right") / x.size
    slack = dkw_slack(x.size, significance)
    diff = emp - ref[: K + 1] - slack
    loc = int(np.argmax(diff))
    return DominationVerdict(bool(diff[loc] <= 0), float(diff[loc]), loc, "statistical",
                             significance)


def monotone_expectation_check(pmf_low, pmf_high, f) -> bool:
    """Verify ``E[f(low)] <= E[f(high)]`` for a non-decreasing tabulated ``f``."""
    f = np.asarray(f, dtype=float)
    if (np.diff(f) < 0).any():
        raise ValueError("f is not monotone on the support")
    if not domination_test_exact(pmf_low, pmf_high).holds:
        raise ValueError("pmf_high does not dominate pmf_low")
    lo = float(np.dot(f, pmf_low))
    hi = float(np.dot(f, pmf_high))
    return lo <= hi + EXACT_TOL * max(1.0, abs(hi))


def simple_ga_fitness_distribution(n: int, mu: int, t: int, p: float | None = None) -> np.ndarray:
    """Exact law of ``OneMax(P_i^{(t)})`` for the mutation-only simple GA.

    The tuple of fitness values is itself a Markov chain (selection only
    sees fitness, and the offspring fitness law depends only on the
    parent fitness), so enumerating the ``(n+1)^mu`` fitness tuples is
    exhaustive.
    """
    p = 1.0 / n if p is None else p
    # kernel[k] = law of the offspring OneMax given parent OneMax k (distance n-k to all-ones)
    kernel = np.stack([offspring_distance_pmf(n - k, n, p)[::-1] for k in range(n + 1)])
    tuples = np.array(np.unravel_index(np.arange((n + 1) ** mu), (n + 1,) * mu)).T
    prob = np.ones(len(tuples))
    init = binomial_pmf(n, 0.5)
    for j in range(mu):
        prob *= init[tuples[:, j]]
    for _ in range(t):
        sel = fp_probabilities(tuples.astype(float))  # (states, mu)
        child = np.einsum("sm,smk->sk", sel, kernel[tuples])  # each child's law
        # children are i.i.d. given the parents
        new = np.ones((len(tuples), len(tuples)))
        for j in range(mu):
            new *= child[:, tuples[:, j]]
        prob = prob @ new
    marginal = np.zeros(n + 1)
    np.add.at(marginal, tuples[:, 0], prob)
    return marginal


def simple_ga_fitness_samples(n: int, mu: int, times: Sequence[int], samples: int,
                              rng: np.random.Generator, p: float | None = None,
                              chunk: int = 2000) -> dict[int, np.ndarray]:
    """OneMax of individual 0 at each time in ``times`` across independent runs."""
    from .engine import simple_ga

    proc = simple_ga(n, mu, p)
    wanted = set(times)
    out: dict[int, list] = {t: [] for t in times}

    def record(t, bits):
        if t in wanted:
            out[t].append(bits[:, 0, :].sum(axis=1))

    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        simulate_batch(proc, k, max(times), rng, record)
        done += k
    return {t: np.concatenate(v) for t, v in out.items()}


def offspring_order_violations(max_n: int = 10, rates: Sequence[float] | None = None
                           ) -> list[tuple[int, int, int, float]]:
    """All ``(n, d1, d2, p)`` with ``d1 > d2`` where the farther parent fails to dominate."""
    rates = [0.05 * k for k in range(1, 11)] if rates is None else rates
    bad = []
    for n in range(1, max_n + 1):
        for p in rates:
            pmfs = [offspring_distance_pmf(d, n, p) for d in range(n + 1)]
            for d1 in range(n + 1):
                for d2 in range(d1):
                    if not domination_test_exact(pmfs[d2], pmfs[d1]).holds:
                        bad.append((n, d1, d2, p))
    return bad


@dataclass
class OracleRecord:
    chain: int
    states: int
    accepted: bool
    delta: float = math.nan
    Delta: float = math.nan
    M: float = math.nan
    worst_prob_ratio: float = math.nan
    expected_T: float = math.nan
    expected_T_bound: float = math.nan
    truncated: bool = False
    violations: int = 0

    def to_record(self) -> dict:
        return {"check": "lemma1_oracle", **asdict(self)}


def drift_bound_oracle(chain: FiniteChain, index: int = 0, horizon: int = 1000) -> OracleRecord:
    """Check one chain against the negative-drift bounds at every ``L <= horizon``."""
    cert = chain_drift_check(chain)
    rec = OracleRecord(index, len(chain.labels), cert is not None)
    if cert is None:
        return rec
    res = chain_exact_hitting(chain, horizon)
    Ls = np.arange(1, horizon + 1)
    bound = Ls * cert.Delta / (cert.delta * chain.M)
    exact = res.prob_before[1:]
    e_bound = cert.delta * chain.M / (2 * cert.Delta) - 0.5 if cert.Delta > 0 else math.inf
    viol = int((exact > bound + EXACT_TOL).sum())
    if not res.expected_T >= e_bound - EXACT_TOL * max(1.0, abs(e_bound)):
        viol += 1
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = float(np.max(np.where(bound > 0, exact / bound, 0.0)))
    rec.delta, rec.Delta, rec.M = cert.delta, cert.Delta, chain.M
    rec.worst_prob_ratio = ratio
    rec.expected_T, rec.expected_T_bound, rec.truncated = res.expected_T, e_bound, res.truncated
    rec.violations = viol
    return rec
