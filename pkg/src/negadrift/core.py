"""Search-space primitives: bit strings, populations and potentials.

Bit strings are packed into a Python ``int`` (bit ``i`` of the word is
position ``i`` of the string), so Hamming distance is one XOR plus a
popcount. Populations keep their members as rows of a read-only ``uint8``
matrix, which is the layout the vectorised simulation code works on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class PreconditionError(ValueError):
    """Raised when the inputs violate a theorem's hypotheses."""


@dataclass(frozen=True)
class BitString:
    word: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"length must be positive, got {self.n}")
        if self.word < 0 or self.word >> self.n:
            raise ValueError("word has bits outside the declared length")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitString:
        bits = list(bits)
        word = 0
        for i, b in enumerate(bits):
            if b not in (0, 1, True, False):
                raise ValueError(f"bit {i} is {b!r}, expected 0 or 1")
            if b:
                word |= 1 << i
        return cls(word, len(bits))

    @classmethod
    def from_str(cls, s: str) -> BitString:
        return cls.from_bits(int(c) for c in s)

    @classmethod
    def zeros(cls, n: int) -> BitString:
        return cls(0, n)

    @classmethod
    def ones(cls, n: int) -> BitString:
        return cls((1 << n) - 1, n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> BitString:
        return cls.from_array(rng.integers(0, 2, size=n, dtype=np.uint8))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> BitString:
        arr = np.asarray(arr, dtype=np.uint8)
        packed = np.packbits(arr, bitorder="little")
        return cls(int.from_bytes(packed.tobytes(), "little"), int(arr.shape[0]))

    def to_array(self) -> np.ndarray:
        nbytes = (self.n + 7) // 8
        raw = np.frombuffer(self.word.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, count=self.n, bitorder="little")

    def bits(self) -> tuple[int, ...]:
        return tuple((self.word >> i) & 1 for i in range(self.n))

    def complement(self) -> BitString:
        return BitString(self.word ^ ((1 << self.n) - 1), self.n)

    def __len__(self) -> int:
        return self.n

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits())


def hamming(x: BitString, y: BitString) -> int:
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} vs {y.n}")
    return (x.word ^ y.word).bit_count()


def onemax(x: BitString) -> int:
    return x.word.bit_count()


class Population:
    """An ordered λ-tuple of equal-length bit strings.

    Members are stored as the rows of an immutable ``(lam, n)`` uint8
    matrix; ``P[i]`` returns the ``i``-th member (0-based) as a
    :class:`BitString`.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix: np.ndarray):
        m = np.array(matrix, dtype=np.uint8, copy=True)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"population matrix must be (lam >= 1, n >= 1), got {m.shape}")
        if m.size and m.max() > 1:
            raise ValueError("population entries must be 0 or 1")
        m.flags.writeable = False
        self._matrix = m

    @classmethod
    def from_members(cls, members: Sequence[BitString]) -> Population:
        if not members:
            raise ValueError("population must be non-empty")
        n = members[0].n
        if any(x.n != n for x in members):
            raise ValueError("all members must share the same length")
        return cls(np.stack([x.to_array() for x in members]))

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def lam(self) -> int:
        return self._matrix.shape[0]

    @property
    def n(self) -> int:
        return self._matrix.shape[1]

    @property
    def members(self) -> tuple[BitString, ...]:
        return tuple(BitString.from_array(row) for row in self._matrix)

    def __len__(self) -> int:
        return self.lam

    def __getitem__(self, i: int) -> BitString:
        return BitString.from_array(self._matrix[i])

    def __eq__(self, other) -> bool:
        return isinstance(other, Population) and np.array_equal(self._matrix, other._matrix)

    def __hash__(self) -> int:
        return hash(self._matrix.tobytes())

    def __repr__(self) -> str:
        return f"Population(lam={self.lam}, n={self.n})"


@dataclass(frozen=True)
class PotentialSpec:
    """Potential ``g``: Hamming distance to ``target`` unless ``rule`` is given.

    ``rule`` maps a ``(..., n)`` 0/1 array to integer potentials over the
    leading axes; it must be a module-level function if the process is
    to be shipped to worker processes.
    """

    target: BitString
    rule: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    @classmethod
    def onemax(cls, n: int) -> PotentialSpec:
        """Distance to the all-ones string, i.e. ``n - OneMax``."""
        return cls(BitString.ones(n))

    @property
    def n(self) -> int:
        return self.target.n

    def __call__(self, x: BitString) -> int:
        if self.rule is None:
            return hamming(x, self.target)
        return int(self.rule(x.to_array()))

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        """Potentials for a stack of bit rows of shape ``(..., n)``."""
        if self.rule is not None:
            return np.asarray(self.rule(bits), dtype=np.int64)
        return (bits != self.target.to_array()).sum(axis=-1, dtype=np.int64)


def logsumexp_neg(kappa: float, g: np.ndarray) -> float:
    """``ln Σ exp(-κ g_i)`` with the largest term factored out."""
    z = -kappa * np.asarray(g, dtype=float)
    top = z.max()
    return float(top + np.log(np.exp(z - top).sum()))


def population_potential(P: Population, kappa: float, g: PotentialSpec) -> float:
    """Log of the exponential population potential ``Σ_i exp(-κ g(P_i))``."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if len(P) == 0:
        raise ValueError("empty population")
    return logsumexp_neg(kappa, g.evaluate(P.matrix))
