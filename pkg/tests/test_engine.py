import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from negadrift.core import BitString, Population, PotentialSpec
from negadrift.driftlab import chain_exact_hitting, distance_chain
from negadrift.engine import (EvaluationCounter, PsmProcess, hitting_time_experiment,
                              init_batch, init_population, mu_lambda_ea, replicate_rng, run_until,
                              simple_ga, simulate_batch, step)
from negadrift.mutation import FixedRate
from negadrift.selection import UniformAll


def test_presets():
    proc = mu_lambda_ea(20, 3, 6)
    assert proc.lam == 6 and proc.mutation == FixedRate(1 / 20)
    assert proc.selection.mu == 3
    ga = simple_ga(10, 4)
    assert ga.lam == 4
    with pytest.raises(ValueError):
        mu_lambda_ea(10, 7, 6)


@given(st.integers(1, 30), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30)
def test_step_preserves_shape(n, lam, seed):
    rng = np.random.default_rng(seed)
    for proc in (mu_lambda_ea(n, max(1, lam // 2), lam), simple_ga(n, lam)):
        P = init_population(proc, rng)
        Q = step(P, proc, rng)
        assert (Q.lam, Q.n) == (lam, n)
        assert set(np.unique(Q.matrix)) <= {0, 1}


def test_seeded_initializer_is_near_base_points():
    proc = mu_lambda_ea(200, 2, 10, p=0.0)
    bits = init_batch(proc, 1, np.random.default_rng(0))[0]
    assert len({tuple(r) for r in bits}) <= 2


def test_custom_target_potential():
    target = BitString.from_str("0101")
    proc = mu_lambda_ea(4, 1, 1, target=target)
    P = Population.from_members([target])
    tr = run_until(proc, 0, 5, np.random.default_rng(0), initial=P)
    assert tr.T == 0 and tr.min_g == [0]


def test_run_until_checks_initial_population_first():
    proc = mu_lambda_ea(5, 1, 2)
    P = Population.from_members([BitString.ones(5), BitString.zeros(5)])
    tr = run_until(proc, 0, 10, np.random.default_rng(0), initial=P)
    assert tr.T == 0 and not tr.censored and tr.evaluations == 0


def test_run_until_censoring_and_zero_horizon():
    proc = mu_lambda_ea(60, 1, 1, p=0.0)
    P = Population.from_members([BitString.zeros(60)])
    tr = run_until(proc, 0, 7, np.random.default_rng(0), initial=P)
    assert tr.censored and tr.t == list(range(7)) and tr.evaluations == 6
    empty = run_until(proc, 0, 0, np.random.default_rng(0))
    assert empty.censored and empty.t == []


def test_evaluation_counter():
    proc = simple_ga(8, 5)
    c = EvaluationCounter()
    P = init_population(proc, np.random.default_rng(0))
    for _ in range(3):
        P = step(P, proc, np.random.default_rng(1), c)
    assert c.count == 15


def test_one_one_uniform_mutation_hitting_time():
    # p = 1/2 makes every offspring uniform: T is geometric with success 1/8, E[T] = 7
    proc = PsmProcess(3, 1, UniformAll(), FixedRate(0.5))
    chain = distance_chain(3, FixedRate(0.5), math.log(2), 0)
    assert math.isclose(chain_exact_hitting(chain, 10).expected_T, 7.0, rel_tol=1e-12)
    s = hitting_time_experiment(proc, 0, 10_000, 4000, master_seed=11)
    assert s.censored == 0
    mean = np.mean(s.T)
    sd = math.sqrt(7 * 8)
    assert abs(mean - 7) < 4 * sd / math.sqrt(4000)


def test_replicate_streams_are_independent_of_order():
    a = replicate_rng(5, 3).random(4)
    b = replicate_rng(5, 3).random(4)
    c = replicate_rng(5, 4).random(4)
    assert (a == b).all() and not (a == c).all()


def test_experiment_is_worker_invariant():
    proc = mu_lambda_ea(20, 2, 4)
    one = hitting_time_experiment(proc, 3, 50, 12, master_seed=9, workers=1)
    two = hitting_time_experiment(proc, 3, 50, 12, master_seed=9, workers=2)
    assert one.to_csv() == two.to_csv()
    assert one.seeds[3] == "9:3"
    assert one.hits + one.censored == 12


def test_trace_csv_format():
    proc = mu_lambda_ea(10, 1, 2)
    tr = run_until(proc, 0, 3, np.random.default_rng(1))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,min_g,log_potential,hit"
    assert len(lines) == 1 + len(tr.t)


def test_simulate_batch_records_every_generation():
    seen = []
    simulate_batch(simple_ga(6, 3), 5, 4, np.random.default_rng(0),
                   lambda t, bits: seen.append((t, bits.shape)))
    assert seen == [(t, (5, 3, 6)) for t in range(5)]


def test_process_validation():
    with pytest.raises(ValueError):
        PsmProcess(0, 1, UniformAll(), FixedRate(0.1))
    with pytest.raises(ValueError):
        PsmProcess(4, 1, UniformAll(), FixedRate(0.1), potential=PotentialSpec.onemax(5))
