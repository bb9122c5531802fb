"""The generic population selection-mutation loop, presets and hitting times."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .core import BitString, Population, PotentialSpec, logsumexp_neg
from .mutation import FixedRate, MutationOperator, mutate_array
from .selection import (FitnessProportionate, SelectionOperator, TruncationUniform,
                        select_batch)


@dataclass(frozen=True)
class UniformRandom:
    pass


@dataclass(frozen=True)
class MuLambdaSeeded:
    """``mu`` uniform base points; each member is a mutated copy of a random base point."""

    mu: int

    def __post_init__(self):
        if self.mu < 1:
            raise ValueError(f"mu must be at least 1, got {self.mu}")


Initializer = Union[UniformRandom, MuLambdaSeeded]


@dataclass(frozen=True)
class PsmProcess:
    """Population selection-mutation process on ``{0,1}^n``.

    ``fitness`` maps a ``(..., n)`` bit array to fitness values; the
    default is ``n - g``, i.e. OneMax when the target is all ones.
    ``kappa`` scales the exponential potential recorded in traces.
    """

    n: int
    lam: int
    selection: SelectionOperator
    mutation: MutationOperator
    initializer: Initializer = UniformRandom()
    potential: PotentialSpec | None = None
    fitness: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    kappa: float = math.log(2)

    def __post_init__(self):
        if self.n < 1 or self.lam < 1:
            raise ValueError(f"need n >= 1 and lam >= 1, got n={self.n}, lam={self.lam}")
        if self.potential is None:
            object.__setattr__(self, "potential", PotentialSpec.onemax(self.n))
        elif self.potential.n != self.n:
            raise ValueError("potential target length differs from n")
        if isinstance(self.selection, TruncationUniform) and self.selection.mu > self.lam:
            raise ValueError(f"mu={self.selection.mu} exceeds lam={self.lam}")

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        if self.fitness is not None:
            return np.asarray(self.fitness(bits), dtype=float)
        return (self.n - self.potential.evaluate(bits)).astype(float)


def mu_lambda_ea(n: int, mu: int, lam: int, p: float | None = None,
                 target: BitString | None = None) -> PsmProcess:
    """The (μ,λ) EA embedded as a PSM process of size ``lam``."""
    return PsmProcess(
        n=n, lam=lam,
        selection=TruncationUniform(mu),
        mutation=FixedRate(1.0 / n if p is None else p),
        initializer=MuLambdaSeeded(mu),
        potential=None if target is None else PotentialSpec(target),
    )


def simple_ga(n: int, mu: int, p: float | None = None) -> PsmProcess:
    """Mutation-only simple GA on OneMax with fitness proportionate selection."""
    return PsmProcess(n=n, lam=mu, selection=FitnessProportionate(),
                      mutation=FixedRate(1.0 / n if p is None else p))


class EvaluationCounter:
    """Counts fitness evaluations (one per evaluated individual)."""

    def __init__(self):
        self.count = 0

    def __call__(self, proc: PsmProcess, bits: np.ndarray) -> np.ndarray:
        values = proc.evaluate(bits)
        self.count += int(np.prod(bits.shape[:-1]))
        return values


def init_batch(proc: PsmProcess, runs: int, rng: np.random.Generator) -> np.ndarray:
    shape = (runs, proc.lam, proc.n)
    init = proc.initializer
    if isinstance(init, UniformRandom):
        return rng.integers(0, 2, size=shape, dtype=np.uint8)
    if isinstance(init, MuLambdaSeeded):
        base = rng.integers(0, 2, size=(runs, init.mu, proc.n), dtype=np.uint8)
        pick = rng.integers(0, init.mu, size=(runs, proc.lam))
        parents = np.take_along_axis(base, pick[:, :, None], axis=1)
        return mutate_array(parents, proc.mutation, rng)
    raise TypeError(f"unknown initializer {init!r}")


def step_batch(bits: np.ndarray, proc: PsmProcess, rng: np.random.Generator,
               counter: EvaluationCounter | None = None) -> np.ndarray:
    """One select-then-mutate generation for each of ``runs`` populations."""
    fitness = counter(proc, bits) if counter else proc.evaluate(bits)
    Q = select_batch(fitness, proc.selection, rng)
    parents = np.take_along_axis(bits, Q[:, :, None], axis=1)
    return mutate_array(parents, proc.mutation, rng)


def init_population(proc: PsmProcess, rng: np.random.Generator) -> Population:
    return Population(init_batch(proc, 1, rng)[0])


def step(P: Population, proc: PsmProcess, rng: np.random.Generator,
         counter: EvaluationCounter | None = None) -> Population:
    if P.lam != proc.lam or P.n != proc.n:
        raise ValueError(f"population shape {P.matrix.shape} does not match the process")
    return Population(step_batch(P.matrix[None], proc, rng, counter)[0])


@dataclass
class RunTrace:
    """Per-iteration record of one run.

    ``T`` is the first iteration whose population contains a point of
    potential at most ``a``; when ``censored`` is set no such iteration
    occurred among ``t = 0..L-1`` and ``T`` is ``None`` (so ``T >= L``).
    """

    seed: str
    a: int
    L: int
    t: list[int] = field(default_factory=list)
    min_g: list[int] = field(default_factory=list)
    log_potential: list[float] = field(default_factory=list)
    hit: list[bool] = field(default_factory=list)
    T: int | None = None
    evaluations: int = 0

    @property
    def censored(self) -> bool:
        return self.T is None

    @property
    def iterations(self) -> int:
        return self.t[-1] if self.t else 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "min_g", "log_potential", "hit"])
        for row in zip(self.t, self.min_g, self.log_potential, self.hit):
            w.writerow([row[0], row[1], format(row[2], ".17g"), int(row[3])])
        return buf.getvalue()


def run_until(proc: PsmProcess, a: int, L: int, rng: np.random.Generator,
              seed_label: str = "", initial: Population | None = None) -> RunTrace:
    """Run until some member has potential ``<= a`` or ``L`` populations were inspected.

    The stopping check is applied to ``P^(0)`` before any iteration.
    """
    if not 0 <= a <= proc.n:
        raise ValueError(f"need 0 <= a <= n, got a={a}")
    if L < 0:
        raise ValueError(f"L must be non-negative, got {L}")
    trace = RunTrace(seed=seed_label, a=a, L=L)
    if L == 0:
        return trace
    counter = EvaluationCounter()
    bits = (initial.matrix if initial is not None else init_population(proc, rng).matrix)[None]
    for t in range(L):
        if t > 0:
            bits = step_batch(bits, proc, rng, counter)
        g = proc.potential.evaluate(bits[0])
        hit = bool(g.min() <= a)
        trace.t.append(t)
        trace.min_g.append(int(g.min()))
        trace.log_potential.append(logsumexp_neg(proc.kappa, g))
        trace.hit.append(hit)
        if hit:
            trace.T = t
            break
    trace.evaluations = counter.count
    return trace


def replicate_rng(master_seed: int, k: int) -> np.random.Generator:
    """Stream for replicate ``k``: depends only on ``(master_seed, k)``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(k,)))


@dataclass
class HittingSummary:
    master_seed: int
    a: int
    L: int
    reps: int
    T: list[int | None]
    evaluations: list[int]

    @property
    def hits(self) -> int:
        return sum(t is not None for t in self.T)

    @property
    def censored(self) -> int:
        return self.reps - self.hits

    @property
    def prob_hit(self) -> float:
        """Empirical ``Pr[T < L]``."""
        return self.hits / self.reps

    @property
    def mean_uncensored(self) -> float:
        done = [t for t in self.T if t is not None]
        return sum(done) / len(done) if done else math.nan

    @property
    def seeds(self) -> list[str]:
        return [f"{self.master_seed}:{k}" for k in range(self.reps)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "seed", "T", "censored", "evaluations"])
        for k, (t, ev) in enumerate(zip(self.T, self.evaluations)):
            w.writerow([k, f"{self.master_seed}:{k}", "" if t is None else t, int(t is None), ev])
        return buf.getvalue()

    def summary_row(self) -> dict:
        return {"reps": self.reps, "a": self.a, "L": self.L, "hits": self.hits,
                "censored": self.censored, "prob_hit": self.prob_hit,
                "mean_uncensored": self.mean_uncensored, "master_seed": self.master_seed}


def _one_replicate(args) -> tuple[int, int | None, int]:
    proc, a, L, master_seed, k = args
    tr = run_until(proc, a, L, replicate_rng(master_seed, k), seed_label=f"{master_seed}:{k}")
    return k, tr.T, tr.evaluations


def hitting_time_experiment(proc: PsmProcess, a: int, L: int, reps: int, master_seed: int,
                            workers: int = 1) -> HittingSummary:
    """``reps`` independent runs; replicate ``k`` uses :func:`replicate_rng` ``(master_seed, k)``."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    jobs = [(proc, a, L, master_seed, k) for k in range(reps)]
    if workers <= 1:
        results = [_one_replicate(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_replicate, jobs, chunksize=max(1, reps // (4 * workers))))
    results.sort(key=lambda r: r[0])
    return HittingSummary(master_seed, a, L, reps,
                          [r[1] for r in results], [r[2] for r in results])


def simulate_batch(proc: PsmProcess, runs: int, iterations: int, rng: np.random.Generator,
                   record: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Run ``runs`` independent copies for ``iterations`` generations at once.

    ``record(t, bits)`` is called on every population stack, ``t = 0`` included.
    Returns the final ``(runs, lam, n)`` array.
    """
    bits = init_batch(proc, runs, rng)
    if record:
        record(0, bits)
    for t in range(1, iterations + 1):
        bits = step_batch(bits, proc, rng)
        if record:
            record(t, bits)
    return bits
