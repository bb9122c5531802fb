import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from negadrift.bounds import sbm_constants
from negadrift.core import Population
from negadrift.driftlab import (FiniteChain, chain_drift_check, chain_exact_hitting,
                                distance_chain, dkw_slack, domination_test_exact,
                                domination_test_statistical, drift_right_side,
                                expected_labels, expected_next_potential, drift_bound_oracle,
                                offspring_order_violations, measure_drift,
                                monotone_expectation_check, random_drift_chain,
                                simple_ga_fitness_distribution, simple_ga_fitness_samples,
                                verify_condition_ii, verify_condition_iii)
from negadrift.engine import mu_lambda_ea, replicate_rng, simple_ga
from negadrift.mutation import FixedRate, HeavyTailed, binomial_pmf


def _two_state(p_up):
    P = np.array([[1 - p_up, p_up], [0.0, 1.0]])
    return FiniteChain(np.array([1.0, 100.0]), P, 100.0, np.array([1.0, 0.0]))


def test_chain_validation():
    with pytest.raises(ValueError):
        FiniteChain(np.array([1.0, 2.0]), np.array([[0.5, 0.4], [0, 1]]), 2.0, np.array([1, 0]))
    with pytest.raises(ValueError):
        FiniteChain(np.array([-1.0, 2.0]), np.eye(2), 2.0, np.array([1.0, 0]))


def test_exact_hitting_geometric():
    res = chain_exact_hitting(_two_state(0.1), 5)
    assert math.isclose(res.expected_T, 10.0, rel_tol=1e-12)
    expect = [0.0] + [1 - 0.9 ** t for t in range(5)]
    assert np.allclose(res.prob_before, expect)


def test_exact_hitting_unreachable_is_infinite():
    res = chain_exact_hitting(_two_state(0.0), 5)
    assert res.expected_T == math.inf and res.prob_before.max() == 0


def test_expected_labels():
    out = expected_labels(_two_state(0.5), 2)
    assert np.allclose(out, [1.0, 50.5, 75.25])


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40)
def test_certificate_is_valid_drift(seed):
    chain = random_drift_chain(np.random.default_rng(seed))
    cert = chain_drift_check(chain)
    if cert is None:
        return
    lhs = chain.P @ chain.labels
    rhs = (1 - cert.delta) * chain.labels + cert.Delta
    assert (lhs <= rhs * (1 + 1e-12) + 1e-12).all()
    assert chain.start @ chain.labels <= cert.fixed_point * (1 + 1e-12)
    assert cert.fixed_point < chain.M


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40)
def test_oracle_finds_no_violation(seed):
    rec = drift_bound_oracle(random_drift_chain(np.random.default_rng(seed)), 0, 300)
    assert rec.violations == 0


def test_distance_chain_rows_and_target():
    chain = distance_chain(8, HeavyTailed(1.5), math.log(3), 1)
    assert np.allclose(chain.P.sum(axis=1), 1)
    assert chain.target[:2].all() and not chain.target[2:].any()


def test_condition_ii_worked_example():
    c, _ = sbm_constants(500, 1 / 500, 2, 0.01)
    rep = verify_condition_ii(FixedRate(1 / 500), 500, c.kappa, 2, 0.01, 0, 11)
    assert rep.passed and rep.levels == list(range(1, 11))
    iii = verify_condition_iii(FixedRate(1 / 500), 500, c.kappa, 11, c.D)
    assert iii.holds and iii.exhaustive


def test_condition_ii_fails_with_too_much_selection():
    rep = verify_condition_ii(FixedRate(1 / 500), 500, math.log(2), 3.0, 0.01, 0, 11)
    assert not rep.passed and rep.tightest_ratio > 1


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=15)
def test_measured_drift_agrees_with_exact(seed):
    rng = np.random.default_rng(seed)
    proc = mu_lambda_ea(12, 2, 4)
    P = Population(rng.integers(0, 2, size=(4, 12)))
    exact = expected_next_potential(proc, P, math.log(2))
    m = measure_drift(proc, P, math.log(2), 20_000, rng)
    assert abs(m.mean - exact) <= 3 * m.half_width + 1e-12


def test_drift_right_side():
    assert math.isclose(drift_right_side(2.0, 0.1, 0.5, 4, math.log(2), 3), 1.8 + 0.25)


def test_exact_domination():
    low, high = binomial_pmf(10, 0.3), binomial_pmf(10, 0.6)
    assert domination_test_exact(low, high).holds
    v = domination_test_exact(high, low)
    assert not v.holds and v.gap > 0
    assert monotone_expectation_check(low, high, np.arange(11) ** 2)
    with pytest.raises(ValueError):
        domination_test_exact(low, binomial_pmf(9, 0.3))


def test_offspring_order_small_grid():
    assert offspring_order_violations(6) == []


def test_dkw_slack_value():
    assert math.isclose(dkw_slack(10_000, 1e-3), math.sqrt(math.log(1000) / 20_000))


def test_statistical_domination_detects_shift():
    rng = np.random.default_rng(0)
    ref = np.cumsum(binomial_pmf(30, 0.5))
    assert domination_test_statistical(rng.binomial(30, 0.5, 20_000), ref, 1e-3).holds
    assert domination_test_statistical(rng.binomial(30, 0.6, 20_000), ref, 1e-3).holds
    assert not domination_test_statistical(rng.binomial(30, 0.45, 20_000), ref, 1e-3).holds


def test_simple_ga_exact_distribution_dominates_uniform():
    pmf = simple_ga_fitness_distribution(6, 3, 2)
    assert math.isclose(pmf.sum(), 1.0, rel_tol=1e-12)
    assert domination_test_exact(binomial_pmf(6, 0.5), pmf).holds
    assert np.allclose(simple_ga_fitness_distribution(6, 3, 0), binomial_pmf(6, 0.5))


def test_simple_ga_samples_match_exact_law():
    exact = simple_ga_fitness_distribution(5, 2, 3)
    s = simple_ga_fitness_samples(5, 2, [3], 40_000, replicate_rng(1, 0))[3]
    freq = np.bincount(s, minlength=6) / len(s)
    assert np.abs(freq - exact).max() < 0.01
