"""Scaled-down replication of the bias, agreement and sign findings of the estimator study."""
import math
from collections import Counter

import numpy as np
import pytest

from ewens_utils.config import THETA_P1, THETA_P2, THETA_P3, ExperimentConfig
from ewens_utils.estimators import estimate_by_name, estimate_population_num_types
from ewens_utils.partition import (expected_num_types, expected_size_index, kn_pmf, sample_partition,
                                   subsample_partition, total_variation)
from study_utils.montecarlo import replication_stream, run_experiment

pytestmark = pytest.mark.slow


def by_key(summaries):
    return {(s.n, s.theta, s.estimator): s for s in summaries}


@pytest.mark.parametrize('theta', [0.5, 1.0, 5.0])
def test_subsampled_types_follow_exact_law(theta):
    rng = np.random.default_rng(17)
    draws = 100_000
    counts = Counter(subsample_partition(sample_partition(6, theta, rng), 3, rng).k for _ in range(draws))
    probs = {k: p for k, p in enumerate(kn_pmf(3, theta), start=1)}
    assert total_variation(counts, probs) < 0.01


def test_bias_corrections_beat_plug_in_at_small_n():
    config = ExperimentConfig(N=10_000, n_values=[20], theta_values=THETA_P1, reps=2000, seed=7,
                              estimators=['nm', 'bc1', 'bc2'])
    cell = by_key(run_experiment(config))
    for corrected in ('bc1', 'bc2'):
        losses = 0
        for theta in THETA_P1:
            nm, bc = cell[(20, theta, 'nm')], cell[(20, theta, corrected)]
            margin = 2.0 * max(nm.mc_se_rb, bc.mc_se_rb)
            if abs(bc.rb_percent) > abs(nm.rb_percent) + margin:
                losses += 1
        assert losses <= 1, corrected


def test_estimators_agree_at_large_n():
    thetas = THETA_P1 + THETA_P2 + THETA_P3
    config = ExperimentConfig(N=10_000, n_values=[1000], theta_values=thetas, reps=2000, seed=8,
                              estimators=['nm', 'bc1', 'bc2'], workers=4)
    cell = by_key(run_experiment(config))
    for theta in thetas:
        rows = [cell[(1000, theta, name)] for name in ('nm', 'bc1', 'bc2')]
        for a in rows:
            for b in rows:
                tolerance = max(1.0, 3.0 * max(a.mc_se_rb, b.mc_se_rb))
                assert abs(abs(a.rb_percent) - abs(b.rb_percent)) < tolerance, theta


def test_only_additive_correction_goes_negative():
    config = ExperimentConfig(N=10_000, n_values=[20, 100], theta_values=[1.0, 50.0, 900.0], reps=500, seed=9,
                              estimators=['nm', 'bc1', 'bc2'])
    summaries = run_experiment(config)
    for s in summaries:
        if s.estimator in ('nm', 'bc2'):
            assert s.neg_rate == 0.0
    cell = by_key(summaries)
    assert max(cell[key].neg_rate for key in [(20, 50.0, 'bc1'), (20, 900.0, 'bc1'), (100, 900.0, 'bc1')]) > 0.0


def exact_mean(n, theta, estimate):
    """E[estimate(K_n)] summed over the exact law of K_n."""
    return math.fsum(p * estimate(k) for k, p in enumerate(kn_pmf(n, theta), start=1))


def test_expectation_estimator_equals_types_seen_when_the_population_is_the_sample():
    n, theta = 100, 5.0
    for k in (2, 17, 60, 99):
        assert estimate_population_num_types(k, n, n).value == pytest.approx(k, rel=1e-9)
    mean = exact_mean(n, theta, lambda k: estimate_population_num_types(k, n, n).value)
    assert mean == pytest.approx(expected_num_types(theta, n), rel=1e-6)


def test_expectation_estimator_overshoots_a_larger_population():
    # eta_N(theta_ML) is a nonlinear function of K_n once N > n, so it is biased upwards
    n, theta, N, reps = 100, 5.0, 10_000, 10_000
    truth = expected_num_types(theta, N)
    mean = exact_mean(n, theta, lambda k: estimate_population_num_types(k, n, N).value)
    assert truth == pytest.approx(38.523363, abs=1e-5)
    assert mean == pytest.approx(38.972734, abs=1e-4)
    assert mean - truth > 0.4

    values = np.empty(reps)
    for rep in range(reps):
        k = sample_partition(n, theta, replication_stream(12, 0, rep)).k
        values[rep] = estimate_population_num_types(k, n, N).value
    se = values.std(ddof=1) / math.sqrt(reps)
    assert abs(values.mean() - mean) < 4.0 * se


def test_relative_bias_shrinks_as_the_sample_grows():
    N, theta = 10_000, 1.0
    truth = expected_size_index(theta, 1, N)
    for name in ('nm', 'bc1', 'bc2'):
        rb = [abs(exact_mean(n, theta, lambda k: estimate_by_name(name, k, n, 1, N).value) / truth - 1.0)
              for n in (20, 100, 1000)]
        assert rb[0] > rb[1] > rb[2], name
    nm = exact_mean(20, theta, lambda k: estimate_by_name('nm', k, 20, 1, N).value)
    assert 100.0 * (nm / truth - 1.0) == pytest.approx(10.38, abs=0.05)
