"""Clipped estimators of the expected size indices R_i, of E[K_N], and of population-unique risk."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence

from .config import ClipPolicy
from .errors import DomainError
from .likelihood import SolutionKind, ThetaSolution, bias_term, solve_adjusted_mle, solve_mle
from .partition import expected_num_types, expected_size_index

__all__ = ['DEFAULT_POLICY', 'EstimatorKind', 'Branch', 'EstimateRecord', 'apply_scheme', 'estimate_size_indices',
           'estimate_nm', 'estimate_bc1', 'estimate_bc2', 'estimate_population_num_types', 'population_unique_risk',
           'estimate_by_name']

_logger = logging.getLogger(__name__)

DEFAULT_POLICY = ClipPolicy()


class EstimatorKind(Enum):
    NM = 'nm'
    BC1 = 'bc1'
    BC2 = 'bc2'
    ETA_UMVUE = 'eta'
    RISK = 'risk'


class Branch(Enum):
    K1_ZERO = 'K1Zero'
    INTERIOR = 'Interior'
    CLIPPED_AT_C_PLUS = 'ClippedAtCPlus'
    FLOORED = 'Floored'


@dataclass(frozen=True)
class EstimateRecord:
    kind: EstimatorKind
    value: float
    theta_used: float
    branch: Branch
    index: Optional[int] = None
    raw_value: Optional[float] = None
    sampling_fraction: Optional[float] = None


def _check_inputs(k: int, n: int, N: int, i: Optional[int] = None):
    if not (2 <= n <= N):
        raise DomainError(f'Sizes must satisfy 2 <= n <= N, got n={n}, N={N}')
    if not (1 <= k <= n):
        raise DomainError(f'Number of types k={k} must lie in [1, n={n}]')
    if i is not None and not (1 <= i <= N):
        raise DomainError(f'Size index i={i} must lie in [1, N={N}]')


def apply_scheme(sol: ThetaSolution, f: Callable[[float], float], policy: ClipPolicy = DEFAULT_POLICY,
                 kind: EstimatorKind = EstimatorKind.NM, value_at_k1: Optional[float] = None,
                 clipped: Optional[Callable[[float], float]] = None, index: Optional[int] = None) -> EstimateRecord:
    """Map a theta solution onto an estimate.

    K_n = 1 gives value_at_k1; a root below the floor is replaced by policy.theta_floor; a root in
    (0, c_plus] is plugged into f; anything above c_plus takes clipped(c_plus), clipped defaulting to f.
    """
    if sol.kind is SolutionKind.DEGENERATE_ZERO:
        if sol.k == 1:
            value = policy.value_at_k1 if value_at_k1 is None else value_at_k1
            return EstimateRecord(kind, float(value), 0.0, Branch.K1_ZERO, index=index)
        return EstimateRecord(kind, f(policy.theta_floor), policy.theta_floor, Branch.FLOORED, index=index)

    if sol.kind is SolutionKind.INTERIOR and policy.contains(sol.theta):
        return EstimateRecord(kind, f(sol.theta), sol.theta, Branch.INTERIOR, index=index)

    clip_f = f if clipped is None else clipped
    return EstimateRecord(kind, clip_f(policy.c_plus), policy.c_plus, Branch.CLIPPED_AT_C_PLUS, index=index)


def _solve(kind: EstimatorKind, k: int, n: int, policy: ClipPolicy) -> ThetaSolution:
    if kind is EstimatorKind.BC2:
        return solve_adjusted_mle(k, n, policy.c_plus)
    return solve_mle(k, n, policy.c_plus)


def _size_index_record(kind: EstimatorKind, sol: ThetaSolution, i: int, N: int, policy: ClipPolicy) -> EstimateRecord:
    def r_i(theta):
        return expected_size_index(theta, i, N)

    if kind is EstimatorKind.BC1:
        # the clipped branch stays at R_i(c_plus), without the bias correction
        def corrected(theta):
            return r_i(theta) - bias_term(theta, i, N, sol.n)
        return apply_scheme(sol, corrected, policy, kind, clipped=r_i, index=i)
    return apply_scheme(sol, r_i, policy, kind, index=i)


def estimate_size_indices(k: int, n: int, indices: Sequence[int], N: int, kind: EstimatorKind,
                          policy: ClipPolicy = DEFAULT_POLICY) -> List[EstimateRecord]:
    """Estimates of R_i for several i from one shared theta estimate."""
    if kind not in (EstimatorKind.NM, EstimatorKind.BC1, EstimatorKind.BC2):
        raise DomainError(f'{kind.name} is not an estimator of R_i')
    for i in indices:
        _check_inputs(k, n, N, i)
    sol = _solve(kind, k, n, policy)
    return [_size_index_record(kind, sol, i, N, policy) for i in indices]


def estimate_nm(k: int, n: int, i: int, N: int, policy: ClipPolicy = DEFAULT_POLICY) -> EstimateRecord:
    """Plug-in R_i(theta_ML) with clipping."""
    return estimate_size_indices(k, n, [i], N, EstimatorKind.NM, policy)[0]


def estimate_bc1(k: int, n: int, i: int, N: int, policy: ClipPolicy = DEFAULT_POLICY) -> EstimateRecord:
    """R_i(theta_ML) - B_i(theta_ML); not truncated, so it can go negative."""
    return estimate_size_indices(k, n, [i], N, EstimatorKind.BC1, policy)[0]


def estimate_bc2(k: int, n: int, i: int, N: int, policy: ClipPolicy = DEFAULT_POLICY) -> EstimateRecord:
    """R_i at the adjusted maximum likelihood root."""
    return estimate_size_indices(k, n, [i], N, EstimatorKind.BC2, policy)[0]


def estimate_population_num_types(k: int, n: int, N: int, policy: ClipPolicy = DEFAULT_POLICY) -> EstimateRecord:
    """eta(theta_ML) = E[K_N] at the MLE. Equals K_n when N = n; biased upwards for N > n."""
    _check_inputs(k, n, N)
    sol = solve_mle(k, n, policy.c_plus)
    return apply_scheme(sol, lambda theta: expected_num_types(theta, N), policy, EstimatorKind.ETA_UMVUE,
                        value_at_k1=policy.eta_value_at_k1)


def population_unique_risk(k: int, n: int, N: int, scheme: EstimatorKind = EstimatorKind.NM,
                           policy: ClipPolicy = DEFAULT_POLICY) -> EstimateRecord:
    """Risk f * R_1 with sampling ratio f = n / N; raw_value holds the estimated population uniques."""
    r1 = estimate_size_indices(k, n, [1], N, scheme, policy)[0]
    f = n / N
    return EstimateRecord(EstimatorKind.RISK, f * r1.value, r1.theta_used, r1.branch, index=1,
                          raw_value=r1.value, sampling_fraction=f)


def estimate_by_name(name: str, k: int, n: int, i: int, N: int, policy: ClipPolicy = DEFAULT_POLICY) -> EstimateRecord:
    try:
        kind = EstimatorKind(name.lower())
    except ValueError:
        raise DomainError(f'Unknown estimator "{name}"') from None
    if kind is EstimatorKind.ETA_UMVUE:
        return estimate_population_num_types(k, n, N, policy)
    if kind is EstimatorKind.RISK:
        return population_unique_risk(k, n, N, EstimatorKind.NM, policy)
    return estimate_size_indices(k, n, [i], N, kind, policy)[0]
