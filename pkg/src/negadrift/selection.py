"""Selection operators and reproduction-number accounting.

Indices are 0-based throughout. Every selection routine is written for a
batch of independent populations (fitness of shape ``(runs, lam)``); the
single-population functions are thin wrappers over the batch versions so
that a run and a batch of runs consume randomness the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class TruncationUniform:
    """Keep ``mu`` fittest (random tie-breaking), pick parents uniformly among them."""

    mu: int

    def __post_init__(self):
        if self.mu < 1:
            raise ValueError(f"mu must be at least 1, got {self.mu}")


@dataclass(frozen=True)
class FitnessProportionate:
    pass


@dataclass(frozen=True)
class UniformAll:
    pass


SelectionOperator = Union[TruncationUniform, FitnessProportionate, UniformAll]


@dataclass(frozen=True)
class SelectionOutcome:
    indices: np.ndarray  # Q, shape (lam,)
    counts: np.ndarray  # R(i, P), shape (lam,)


def fp_probabilities(fitness) -> np.ndarray:
    """Fitness-proportionate selection law; uniform when every fitness is zero."""
    f = np.asarray(fitness, dtype=float)
    if (f < 0).any():
        raise ValueError("fitness proportionate selection needs non-negative fitness")
    total = f.sum(axis=-1, keepdims=True)
    uniform = np.full_like(f, 1.0 / f.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, f / np.where(total > 0, total, 1.0), uniform)


def truncation_subset(fitness: np.ndarray, mu: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``mu`` fittest entries per row, ties broken uniformly at random."""
    fitness = np.asarray(fitness)
    lam = fitness.shape[-1]
    if mu > lam:
        raise ValueError(f"mu={mu} exceeds population size {lam}")
    keys = rng.random(fitness.shape)
    # lexsort: last key is primary
    order = np.lexsort((keys, -fitness), axis=-1)
    return order[..., :mu]


def select_batch(fitness, op: SelectionOperator, rng: np.random.Generator) -> np.ndarray:
    """Parent indices ``Q`` of shape ``(runs, lam)`` for a batch of populations."""
    fitness = np.atleast_2d(np.asarray(fitness, dtype=float))
    runs, lam = fitness.shape
    if isinstance(op, TruncationUniform):
        subset = truncation_subset(fitness, op.mu, rng)
        pick = rng.integers(0, op.mu, size=(runs, lam))
        return np.take_along_axis(subset, pick, axis=1)
    if isinstance(op, FitnessProportionate):
        cdf = np.cumsum(fp_probabilities(fitness), axis=1)
        cdf[:, -1] = 1.0
        u = rng.random((runs, lam))
        return (u[:, :, None] >= cdf[:, None, :]).sum(axis=2)
    if isinstance(op, UniformAll):
        return rng.integers(0, lam, size=(runs, lam))
    raise TypeError(f"unknown selection operator {op!r}")


def reproduction_numbers(Q, lam: int) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.int64)
    if Q.size and (Q.min() < 0 or Q.max() >= lam):
        raise ValueError(f"selected index out of range [0, {lam})")
    return np.bincount(Q, minlength=lam)


def select(fitness, op: SelectionOperator, rng: np.random.Generator) -> SelectionOutcome:
    """One selection from a single population with the given fitness vector."""
    fitness = np.asarray(fitness, dtype=float)
    Q = select_batch(fitness[None, :], op, rng)[0]
    return SelectionOutcome(Q, reproduction_numbers(Q, len(fitness)))


def reproduction_rates(fitness, op: SelectionOperator) -> np.ndarray:
    """Exact ``E[R(i, P)]`` for every individual."""
    f = np.asarray(fitness, dtype=float)
    lam = len(f)
    if isinstance(op, UniformAll):
        return np.ones(lam)
    if isinstance(op, FitnessProportionate):
        return lam * fp_probabilities(f)
    if isinstance(op, TruncationUniform):
        mu = op.mu
        if mu > lam:
            raise ValueError(f"mu={mu} exceeds population size {lam}")
        # inclusion probability: certain above the cut-off value, shared evenly within the tied group
        cut = np.sort(f)[::-1][mu - 1]
        above = f > cut
        tied = f == cut
        inclusion = np.where(above, 1.0, 0.0)
        inclusion[tied] = (mu - above.sum()) / tied.sum()
        return inclusion * lam / mu
    raise TypeError(f"unknown selection operator {op!r}")


def estimate_reproduction_rate(fitness, op: SelectionOperator, i: int, reps: int,
                               rng: np.random.Generator, chunk: int = 10_000) -> tuple[float, float]:
    """Monte Carlo mean of ``R(i, P)`` and its normal-approximation 95% half-width."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    f = np.asarray(fitness, dtype=float)
    samples = []
    done = 0
    while done < reps:
        k = min(chunk, reps - done)
        Q = select_batch(np.broadcast_to(f, (k, len(f))), op, rng)
        samples.append((Q == i).sum(axis=1))
        done += k
    r = np.concatenate(samples).astype(float)
    sd = r.std(ddof=1) if reps > 1 else 0.0
    return float(r.mean()), 1.96 * sd / math.sqrt(reps)
