"""Score, information and adjustment terms of the Ewens likelihood, and root solvers for theta.

The log-likelihood of K_n is concave in the natural parameter xi = log(theta), so every solver
brackets and bisects in xi: the xi-score tends to k - 1 as xi -> -inf and to k - n as xi -> +inf.
"""
import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, SolverError
from .partition import check_theta, expected_size_index, log_pochhammer

__all__ = ['SolutionKind', 'ThetaSolution', 'InfoSummary', 'log_likelihood', 'score_theta', 'score_xi',
           'fisher_info_xi', 'dg_xi', 'adjustment_score', 'adjusted_log_likelihood', 'bias_term', 'info_summary',
           'solve_mle', 'solve_adjusted_mle']

_logger = logging.getLogger(__name__)

XI_TOL = 1e-12
MAX_ITER = 200
THETA_LOWER = 1e-8
XI_CEILING = 690.0  # exp(690) is still a finite double
PROBE_POINTS = 64


class SolutionKind(Enum):
    INTERIOR = 1
    DEGENERATE_ZERO = 2
    DIVERGENT_ABOVE = 3


@dataclass(frozen=True)
class ThetaSolution:
    """Outcome of a score-equation solve for the data (k, n).

    theta is set for INTERIOR, and for DIVERGENT_ABOVE when a root was located above the
    clipping ceiling; it is None otherwise.
    """
    kind: SolutionKind
    k: int
    n: int
    theta: Optional[float] = None
    iterations: int = 0
    residual: float = 0.0

    @property
    def is_interior(self) -> bool:
        return self.kind is SolutionKind.INTERIOR


@dataclass(frozen=True)
class InfoSummary:
    g_xi: float
    dg_xi: float
    adj_score_theta: float


def _check_kn(k: int, n: int, min_n: int = 1):
    if n < min_n:
        raise DomainError(f'Sample size must be >= {min_n}, got n={n}')
    if not (1 <= k <= n):
        raise DomainError(f'Number of types k={k} must lie in [1, n={n}]')


def _check_n(n: int):
    if n < 2:
        raise DomainError(f'Sample size must be >= 2, got n={n}')


@functools.lru_cache(maxsize=64)
def _offsets(n: int) -> np.ndarray:
    """j - 1 for j = 2..n."""
    arr = np.arange(1, n, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _theta_of(xi: float) -> float:
    return math.exp(min(xi, XI_CEILING))


def log_likelihood(k: int, n: int, theta: float) -> float:
    """theta-dependent part of the log-likelihood: k log(theta) - log theta^[n]."""
    _check_kn(k, n)
    theta = check_theta(theta)
    return k * math.log(theta) - log_pochhammer(theta, n)


def score_theta(k: int, n: int, theta: float) -> float:
    _check_kn(k, n)
    theta = check_theta(theta)
    return k / theta - math.fsum(1.0 / (theta + np.arange(n, dtype=np.float64)))


def score_xi(k: int, n: int, xi: float) -> float:
    _check_kn(k, n)
    theta = _theta_of(xi)
    jm1 = _offsets(n)
    return math.fsum([k - n, math.fsum(jm1 / (theta + jm1))])


def fisher_info_xi(theta: float, n: int) -> float:
    """g_xi = -d^2 l / d xi^2."""
    _check_n(n)
    theta = check_theta(theta)
    jm1 = _offsets(n)
    return math.fsum(theta * jm1 / (theta + jm1) ** 2)


def dg_xi(theta: float, n: int) -> float:
    _check_n(n)
    theta = check_theta(theta)
    jm1 = _offsets(n)
    return math.fsum(theta * jm1 * (jm1 - theta) / (theta + jm1) ** 3)


def _power_sums(theta: float, n: int):
    jm1 = _offsets(n)
    base = theta + jm1
    return math.fsum(jm1 / base ** 2), math.fsum(jm1 / base ** 3)


def adjustment_score(theta: float, n: int) -> float:
    """theta-derivative of the log adjustment factor; strictly negative."""
    _check_n(n)
    theta = check_theta(theta)
    d2, d3 = _power_sums(theta, n)
    if d2 == 0.0:
        # both sums underflow for huge theta; the ratio tends to 1/theta
        return -1.0 / theta
    return -d3 / d2


def adjusted_log_likelihood(k: int, n: int, theta: float) -> float:
    """log_likelihood plus the log adjustment factor 0.5 log sum (j-1)/(theta+j-1)^2."""
    _check_n(n)
    d2, _ = _power_sums(check_theta(theta), n)
    return log_likelihood(k, n, theta) + 0.5 * math.log(d2)


def bias_term(theta: float, i: int, N: int, n: int) -> float:
    """B_i(theta): leading bias of R_i(theta_ML), with sums over the sample and R_i over the population."""
    _check_n(n)
    theta = check_theta(theta)
    d2, d3 = _power_sums(theta, n)
    return d3 / (d2 * d2) * expected_size_index(theta, i, N)


def info_summary(theta: float, n: int) -> InfoSummary:
    return InfoSummary(g_xi=fisher_info_xi(theta, n), dg_xi=dg_xi(theta, n),
                       adj_score_theta=adjustment_score(theta, n))


def _expand_upper(f: Callable[[float], float], lo: float, hi: float):
    """Push hi up geometrically until f(hi) <= 0; returns (hi, f(hi)) or None past the ceiling."""
    width = hi - lo
    f_hi = f(hi)
    while f_hi > 0.0:
        if hi >= XI_CEILING:
            return None
        hi = min(hi + width, XI_CEILING)
        width *= 2.0
        f_hi = f(hi)
    return hi, f_hi


def _bisect_xi(f: Callable[[float], float], lo: float, hi: float, label: str):
    root, info = bisect(f, lo, hi, xtol=XI_TOL, maxiter=MAX_ITER, full_output=True, disp=False)
    if not info.converged:
        raise SolverError(f'{label}: bisection did not converge in {MAX_ITER} iterations ({info.flag})')
    return root, info.iterations


@functools.lru_cache(maxsize=4096)
def solve_mle(k: int, n: int, c_plus: float = 1e6) -> ThetaSolution:
    """Maximum likelihood estimate of theta from K_n = k."""
    _check_kn(k, n, min_n=2)
    if k == 1:
        return ThetaSolution(SolutionKind.DEGENERATE_ZERO, k, n)
    if k == n:
        return ThetaSolution(SolutionKind.DIVERGENT_ABOVE, k, n)

    def f(xi):
        return score_xi(k, n, xi)

    lo = math.log(THETA_LOWER)
    bracket = _expand_upper(f, lo, math.log(c_plus))
    if bracket is None:
        raise SolverError(f'MLE for k={k}, n={n}: no sign change below theta=exp({XI_CEILING})')
    root, iterations = _bisect_xi(f, lo, bracket[0], f'MLE for k={k}, n={n}')
    return ThetaSolution(SolutionKind.INTERIOR, k, n, theta=math.exp(root),
                         iterations=iterations, residual=f(root))


def _count_sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


@functools.lru_cache(maxsize=4096)
def solve_adjusted_mle(k: int, n: int, c_plus: float = 1e6,
                       adjustment: Optional[Callable[[float, int], float]] = None) -> ThetaSolution:
    """Root of score_theta + adjustment(theta, n) = 0; adjustment defaults to adjustment_score.

    A root below the lower bracket THETA_LOWER is reported as DEGENERATE_ZERO (k >= 2), a root
    above c_plus as DIVERGENT_ABOVE with the located theta attached.
    """
    _check_kn(k, n, min_n=2)
    if k == 1:
        return ThetaSolution(SolutionKind.DEGENERATE_ZERO, k, n)
    adjust = adjustment_score if adjustment is None else adjustment

    def f(xi):
        theta = _theta_of(xi)
        return score_xi(k, n, xi) + theta * adjust(theta, n)

    label = f'Adjusted MLE for k={k}, n={n}'
    lo = math.log(THETA_LOWER)
    f_lo = f(lo)
    if f_lo <= 0.0:
        _logger.debug(f"{label}: score non-positive at theta={THETA_LOWER}, root below the floor")
        return ThetaSolution(SolutionKind.DEGENERATE_ZERO, k, n, residual=f_lo)

    bracket = _expand_upper(f, lo, math.log(c_plus))
    if bracket is None:
        return ThetaSolution(SolutionKind.DIVERGENT_ABOVE, k, n)
    hi = bracket[0]

    grid = np.linspace(lo, hi, PROBE_POINTS)
    changes = _count_sign_changes(np.array([f(x) for x in grid]))
    if changes > 1:
        raise SolverError(f'{label}: {changes} sign changes on the probe grid, root is not unique')

    root, iterations = _bisect_xi(f, lo, hi, label)
    theta = math.exp(root)
    kind = SolutionKind.INTERIOR if theta <= c_plus else SolutionKind.DIVERGENT_ABOVE
    return ThetaSolution(kind, k, n, theta=theta, iterations=iterations, residual=f(root))
