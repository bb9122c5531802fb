import numpy as np
import pytest
from hypothesis import given, strategies as st

from negadrift.selection import (FitnessProportionate, TruncationUniform, UniformAll,
                                 estimate_reproduction_rate, fp_probabilities,
                                 reproduction_numbers, reproduction_rates, select, select_batch,
                                 truncation_subset)

fitness_vectors = st.lists(st.integers(0, 20), min_size=1, max_size=12).map(np.array)


@given(fitness_vectors, st.integers(0, 2 ** 32 - 1))
def test_reproduction_numbers_sum_to_lambda(f, seed):
    rng = np.random.default_rng(seed)
    for op in (UniformAll(), FitnessProportionate(), TruncationUniform(max(1, len(f) // 2))):
        out = select(f, op, rng)
        assert out.counts.sum() == len(f)
        assert ((out.indices >= 0) & (out.indices < len(f))).all()


@given(fitness_vectors)
def test_exact_rates_sum_to_lambda(f):
    for op in (UniformAll(), FitnessProportionate(), TruncationUniform(max(1, len(f) // 2))):
        r = reproduction_rates(f, op)
        assert np.isclose(r.sum(), len(f))
        assert (r >= 0).all()


@given(fitness_vectors, st.integers(0, 2 ** 32 - 1))
def test_truncation_only_picks_top_mu(f, seed):
    mu = max(1, len(f) // 3)
    sub = truncation_subset(f[None, :], mu, np.random.default_rng(seed))[0]
    cut = np.sort(f)[::-1][mu - 1]
    assert len(set(sub)) == mu
    assert (f[sub] >= cut).all()


def test_fp_probabilities():
    assert np.allclose(fp_probabilities([1, 3]), [0.25, 0.75])
    assert np.allclose(fp_probabilities([0, 0, 0]), [1 / 3] * 3)
    with pytest.raises(ValueError):
        fp_probabilities([-1, 2])


def test_fp_never_picks_zero_fitness_when_others_positive():
    Q = select_batch(np.tile([0.0, 2.0, 0.0, 1.0], (500, 1)), FitnessProportionate(),
                     np.random.default_rng(1))
    assert set(np.unique(Q)) <= {1, 3}


def test_truncation_rate_is_lambda_over_mu():
    f = np.arange(20, dtype=float)
    r = reproduction_rates(f, TruncationUniform(10))
    assert np.allclose(r[10:], 2.0) and np.allclose(r[:10], 0.0)


def test_truncation_ties_share_rate():
    f = np.array([5, 3, 3, 3, 1], dtype=float)
    r = reproduction_rates(f, TruncationUniform(2))
    assert np.allclose(r, [2.5, 2.5 / 3, 2.5 / 3, 2.5 / 3, 0])
    mean, hw = estimate_reproduction_rate(f, TruncationUniform(2), 2, 40_000,
                                          np.random.default_rng(2))
    assert abs(mean - 2.5 / 3) < hw + 0.02


@pytest.mark.parametrize("op", [FitnessProportionate(), UniformAll()])
def test_estimate_matches_exact(op):
    f = np.array([1.0, 2.0, 3.0, 4.0])
    mean, hw = estimate_reproduction_rate(f, op, 3, 50_000, np.random.default_rng(4))
    assert abs(mean - reproduction_rates(f, op)[3]) < 2 * hw


def test_reproduction_numbers_checks_range():
    with pytest.raises(ValueError):
        reproduction_numbers([0, 3], 3)
    assert list(reproduction_numbers([0, 0, 2], 3)) == [2, 0, 1]


def test_mu_validation():
    with pytest.raises(ValueError):
        TruncationUniform(0)
    with pytest.raises(ValueError):
        reproduction_rates([1, 2], TruncationUniform(3))
