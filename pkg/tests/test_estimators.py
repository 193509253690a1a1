import math

import pytest

from ewens_utils.config import ClipPolicy
from ewens_utils.errors import ConfigError, DomainError
from ewens_utils.estimators import (Branch, EstimatorKind, apply_scheme, estimate_bc1, estimate_bc2, estimate_by_name,
                                    estimate_nm, estimate_population_num_types, estimate_size_indices,
                                    population_unique_risk)
from ewens_utils.likelihood import SolutionKind, ThetaSolution, bias_term
from ewens_utils.partition import expected_num_types, expected_size_index

SQRT2 = math.sqrt(2.0)


def r1_100(theta):
    return expected_size_index(theta, 1, 100)


def test_clip_policy_validation():
    with pytest.raises(ConfigError):
        ClipPolicy(c_plus=1.0, theta_floor=2.0)
    with pytest.raises(ConfigError):
        ClipPolicy(theta_floor=0.0)
    policy = ClipPolicy(c_plus=50.0)
    assert policy.contains(50.0)
    assert not policy.contains(50.5)
    assert not policy.contains(0.0)


def test_apply_scheme_branches():
    rec = apply_scheme(ThetaSolution(SolutionKind.DEGENERATE_ZERO, 1, 5), r1_100)
    assert (rec.value, rec.branch, rec.theta_used) == (0.0, Branch.K1_ZERO, 0.0)

    rec = apply_scheme(ThetaSolution(SolutionKind.INTERIOR, 2, 3, theta=SQRT2), r1_100)
    assert rec.branch is Branch.INTERIOR
    assert rec.value == pytest.approx(SQRT2 * 100 / (SQRT2 + 99), rel=1e-12)
    assert rec.value == pytest.approx(1.408380, abs=1e-6)

    rec = apply_scheme(ThetaSolution(SolutionKind.DIVERGENT_ABOVE, 5, 5), r1_100)
    assert rec.branch is Branch.CLIPPED_AT_C_PLUS
    assert rec.value == pytest.approx(r1_100(1e6), rel=1e-12)

    rec = apply_scheme(ThetaSolution(SolutionKind.INTERIOR, 4, 5, theta=2e6), r1_100)
    assert rec.branch is Branch.CLIPPED_AT_C_PLUS
    assert rec.theta_used == 1e6

    rec = apply_scheme(ThetaSolution(SolutionKind.DEGENERATE_ZERO, 3, 5), r1_100)
    assert rec.branch is Branch.FLOORED
    assert rec.value == pytest.approx(r1_100(1e-8), rel=1e-12)


def test_apply_scheme_uses_clipped_map():
    sol = ThetaSolution(SolutionKind.DIVERGENT_ABOVE, 5, 5)
    rec = apply_scheme(sol, lambda t: -1.0, clipped=lambda t: t)
    assert rec.value == 1e6


def test_nm_examples():
    assert estimate_nm(1, 20, 1, 10_000).value == 0.0
    rec = estimate_nm(2, 3, 1, 100)
    assert rec.value == pytest.approx(1.408380, abs=1e-6)
    assert rec.theta_used == pytest.approx(SQRT2, abs=1e-10)
    assert rec.branch is Branch.INTERIOR
    rec = estimate_nm(20, 20, 2, 10_000)
    assert rec.branch is Branch.CLIPPED_AT_C_PLUS
    assert rec.value == pytest.approx(expected_size_index(1e6, 2, 10_000), rel=1e-12)


def test_bc1_examples():
    rec = estimate_bc1(2, 3, 1, 100)
    expected = r1_100(SQRT2) - bias_term(SQRT2, 1, 100, 3)
    assert rec.value == pytest.approx(expected, rel=1e-9)
    assert estimate_bc1(1, 3, 1, 100).value == 0.0
    clipped = estimate_bc1(20, 20, 1, 10_000)
    assert clipped.value == pytest.approx(expected_size_index(1e6, 1, 10_000), rel=1e-12)


def test_bc1_can_go_negative():
    # at k = n - 1 the bias term overshoots R_1 for small n
    assert estimate_bc1(2, 3, 1, 100).value < 0.0
    assert estimate_nm(2, 3, 1, 100).value > 0.0


def test_bc2_examples():
    rec = estimate_bc2(2, 2, 1, 100)
    assert rec.value == pytest.approx(1.0, abs=1e-9)
    assert rec.theta_used == pytest.approx(1.0, abs=1e-10)
    assert estimate_bc2(1, 5, 1, 100).value == 0.0
    rec = estimate_bc2(20, 20, 1, 10_000)
    assert rec.branch is Branch.INTERIOR
    assert 0.0 < rec.value < math.inf


def test_bc2_never_negative():
    for k in range(1, 21):
        assert estimate_bc2(k, 20, 1, 10_000).value >= 0.0


def test_shared_theta_across_indices():
    records = estimate_size_indices(4, 30, [1, 2, 3], 500, EstimatorKind.NM)
    assert [r.index for r in records] == [1, 2, 3]
    assert len({r.theta_used for r in records}) == 1
    assert records[1].value == pytest.approx(estimate_nm(4, 30, 2, 500).value, rel=1e-12)
    with pytest.raises(DomainError):
        estimate_size_indices(4, 30, [1], 500, EstimatorKind.ETA_UMVUE)


def test_eta_estimator():
    assert estimate_population_num_types(2, 3, 3).value == pytest.approx(2.0, abs=1e-8)
    assert estimate_population_num_types(1, 3, 100).value == 1.0
    strict = ClipPolicy(eta_value_at_k1=0.0)
    assert estimate_population_num_types(1, 3, 100, strict).value == 0.0
    assert estimate_population_num_types(2, 3, 100).value == pytest.approx(expected_num_types(SQRT2, 100), rel=1e-9)


def test_population_unique_risk():
    rec = population_unique_risk(2, 3, 100)
    assert rec.value == pytest.approx(0.042251, abs=1e-6)
    assert rec.raw_value == pytest.approx(1.408380, abs=1e-6)
    assert rec.sampling_fraction == pytest.approx(0.03)
    assert population_unique_risk(1, 3, 100).value == 0.0
    full = population_unique_risk(3, 10, 10)
    assert full.sampling_fraction == 1.0
    assert full.value == estimate_nm(3, 10, 1, 10).value


@pytest.mark.parametrize('args', [(0, 3, 1, 10), (4, 3, 1, 10), (2, 3, 11, 10), (2, 20, 1, 10), (1, 1, 1, 10)])
def test_domain_errors(args):
    with pytest.raises(DomainError):
        estimate_nm(*args)


def test_estimate_by_name():
    assert estimate_by_name('NM', 2, 3, 1, 100).kind is EstimatorKind.NM
    assert estimate_by_name('eta', 2, 3, 1, 100).kind is EstimatorKind.ETA_UMVUE
    with pytest.raises(DomainError):
        estimate_by_name('mle', 2, 3, 1, 100)


@pytest.mark.parametrize('i', [1, 2, 5])
def test_plug_in_and_adjusted_estimates_stay_in_range(i):
    N = 1000
    for n in range(2, 31):
        for k in range(1, n + 1):
            for estimate in (estimate_nm, estimate_bc2):
                value = estimate(k, n, i, N).value
                assert math.isfinite(value) and value >= 0.0, (estimate.__name__, k, n)


def test_adjusted_estimate_of_singletons_sits_below_plug_in():
    N = 10_000
    for n in (3, 10, 20, 50):
        for k in range(2, n):
            nm, bc2 = estimate_nm(k, n, 1, N), estimate_bc2(k, n, 1, N)
            assert nm.branch is Branch.INTERIOR and bc2.branch is Branch.INTERIOR
            assert bc2.value < nm.value, (k, n)
