"""Exact combinatorics of the Ewens sampling formula: PMFs, Stirling tables, samplers."""
import functools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import polars as pl
from scipy.special import gammaln

from .errors import DomainError, ResourceError

__all__ = ['ENUMERATION_CAP', 'STIRLING_TABLE_CAP', 'check_theta', 'Partition', 'ModelParams', 'StirlingTable',
           'log_pochhammer', 'ewens_log_pmf', 'stirling1_log_table', 'kn_log_pmf', 'kn_pmf', 'expected_size_index',
           'size_index_derivative', 'size_index_second_derivative', 'expected_num_types', 'sample_partition',
           'subsample_partition', 'enumerate_partitions', 'ewens_pmf_table', 'format_partition', 'parse_partition',
           'total_variation']

_logger = logging.getLogger(__name__)

ENUMERATION_CAP = 12
STIRLING_TABLE_CAP = 5000


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not (theta > 0.0 and math.isfinite(theta)):
        raise DomainError(f'Diversity theta must be positive and finite, got {theta}')
    return theta


class Partition:
    """Frequency-of-frequencies vector of a random partition.

    s maps a part size i to the number s_i of types seen exactly i times. Only strictly positive
    multiplicities are stored; n = sum i*s_i and k = sum s_i are derived.
    """
    __slots__ = ('_items', 'n', 'k')

    def __init__(self, s: Mapping[int, int]):
        items = []
        for i, c in s.items():
            if int(i) != i or i < 1:
                raise DomainError(f'Part size must be a positive integer, got {i!r}')
            if int(c) != c or c < 0:
                raise DomainError(f'Multiplicity of part size {i} must be a non-negative integer, got {c!r}')
            if c > 0:
                items.append((int(i), int(c)))
        if not items:
            raise DomainError('A partition needs at least one part')
        items.sort()
        self._items: Tuple[Tuple[int, int], ...] = tuple(items)
        self.n = sum(i * c for i, c in items)
        self.k = sum(c for _, c in items)

    @classmethod
    def from_sizes(cls, sizes: Iterable[int]) -> 'Partition':
        """Build from the list of type sizes (one entry per type)."""
        s: Dict[int, int] = {}
        for size in sizes:
            size = int(size)
            if size > 0:
                s[size] = s.get(size, 0) + 1
        return cls(s)

    @property
    def s(self) -> Dict[int, int]:
        return dict(self._items)

    def items(self) -> Tuple[Tuple[int, int], ...]:
        return self._items

    def get(self, i: int) -> int:
        return self.s.get(i, 0)

    def sizes(self) -> np.ndarray:
        """Expanded multiset of type sizes, ascending."""
        return np.repeat([i for i, _ in self._items], [c for _, c in self._items]).astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        return f'Partition({format_partition(self)}, n={self.n}, k={self.k})'


@dataclass(frozen=True)
class ModelParams:
    theta: float
    pop_size: int
    sample_size: int

    def __post_init__(self):
        check_theta(self.theta)
        if self.sample_size < 2:
            raise DomainError(f'Sample size must be >= 2, got {self.sample_size}')
        if self.sample_size > self.pop_size:
            raise DomainError(f'Sample size {self.sample_size} exceeds population size {self.pop_size}')

    @classmethod
    def from_xi(cls, xi: float, pop_size: int, sample_size: int) -> 'ModelParams':
        return cls(theta=math.exp(xi), pop_size=pop_size, sample_size=sample_size)

    @property
    def xi(self) -> float:
        return math.log(self.theta)


@dataclass(frozen=True)
class StirlingTable:
    """log s(m, k) for 1 <= k <= m <= n. rows[m][k] holds log s(m, k); rows[m][0] is -inf for m >= 1."""
    n: int
    rows: Tuple[np.ndarray, ...]

    def log_s(self, m: int, k: int) -> float:
        if not (1 <= m <= self.n):
            raise DomainError(f'Stirling table covers m <= {self.n}, got m={m}')
        if not (1 <= k <= m):
            return -math.inf
        return float(self.rows[m][k])

    def row(self, m: int) -> np.ndarray:
        """log s(m, k) for k = 1..m."""
        if not (1 <= m <= self.n):
            raise DomainError(f'Stirling table covers m <= {self.n}, got m={m}')
        return self.rows[m][1:]


def log_pochhammer(theta: float, m: int) -> float:
    """log of the rising factorial theta (theta+1) ... (theta+m-1)."""
    theta = check_theta(theta)
    if m < 0:
        raise DomainError(f'Rising factorial length must be non-negative, got {m}')
    if m == 0:
        return 0.0
    return math.fsum(np.log(theta + np.arange(m, dtype=np.float64)))


def ewens_log_pmf(p: Partition, theta: float) -> float:
    theta = check_theta(theta)
    if sum(i * c for i, c in p.items()) != p.n:
        raise DomainError(f'Inconsistent partition {p!r}')
    terms = [gammaln(p.n + 1), p.k * math.log(theta), -log_pochhammer(theta, p.n)]
    for j, s_j in p.items():
        terms.append(-s_j * math.log(j))
        terms.append(-gammaln(s_j + 1))
    return math.fsum(terms)


@functools.lru_cache(maxsize=16)
def _build_stirling_table(n: int) -> StirlingTable:
    _logger.debug(f"Building log Stirling table up to n={n}")
    rows: List[np.ndarray] = [np.array([0.0])]
    prev = np.array([-np.inf, 0.0])
    rows.append(prev)
    for m in range(1, n):
        # s(m+1, k) = s(m, k-1) + m s(m, k)
        shifted = np.concatenate(([-np.inf], prev))
        stay = np.concatenate((prev, [-np.inf])) + math.log(m)
        prev = np.logaddexp(shifted, stay)
        rows.append(prev)
    for row in rows:
        row.setflags(write=False)
    return StirlingTable(n=n, rows=tuple(rows))


def stirling1_log_table(n: int, cap: int = STIRLING_TABLE_CAP) -> StirlingTable:
    if n < 1:
        raise DomainError(f'Stirling table size must be >= 1, got {n}')
    if n > cap:
        raise ResourceError(f'Stirling table of size {n} exceeds cap {cap}')
    return _build_stirling_table(int(n))


def kn_log_pmf(n: int, k: int, theta: float, table: Optional[StirlingTable] = None) -> float:
    """log P(K_n = k) = k log theta + log s(n, k) - log theta^[n]."""
    theta = check_theta(theta)
    if not (1 <= k <= n):
        raise DomainError(f'Number of types k={k} must lie in [1, {n}]')
    if table is None:
        table = stirling1_log_table(n)
    if table.n < n:
        raise DomainError(f'Stirling table covers n <= {table.n}, got n={n}')
    return k * math.log(theta) + table.log_s(n, k) - log_pochhammer(theta, n)


def kn_pmf(n: int, theta: float, table: Optional[StirlingTable] = None) -> np.ndarray:
    """P(K_n = k) for k = 1..n."""
    theta = check_theta(theta)
    if table is None:
        table = stirling1_log_table(n)
    if table.n < n:
        raise DomainError(f'Stirling table covers n <= {table.n}, got n={n}')
    k = np.arange(1, n + 1, dtype=np.float64)
    return np.exp(table.row(n) + k * math.log(theta) - log_pochhammer(theta, n))


def expected_size_index(theta: float, i: int, N: int) -> float:
    """Watterson's R_i(theta) = E[S_i] in a population of size N."""
    theta = check_theta(theta)
    if not (1 <= i <= N):
        raise DomainError(f'Size index i={i} must lie in [1, N={N}]')
    j = np.arange(1, i + 1, dtype=np.float64)
    log_ratio = math.fsum(np.log(N - j + 1) - np.log(theta + N - j))
    return math.exp(math.log(theta) - math.log(i) + log_ratio)


def size_index_derivative(theta: float, i: int, N: int) -> float:
    """d R_i / d theta = (R_i / theta) [1 - sum_j theta / (theta + N - j)]."""
    r = expected_size_index(theta, i, N)
    j = np.arange(1, i + 1, dtype=np.float64)
    return r / theta * (1.0 - math.fsum(theta / (theta + N - j)))


def size_index_second_derivative(theta: float, i: int, N: int) -> float:
    """d^2 R_i / d theta^2; diagnostic only."""
    r = expected_size_index(theta, i, N)
    j = np.arange(1, i + 1, dtype=np.float64)
    u = 1.0 / (theta + N - j)
    su = math.fsum(u)
    return r * (-2.0 / theta * su + math.fsum(u * u) + su * su)


def expected_num_types(theta: float, M: int) -> float:
    """eta(theta) = E[K_M] = sum_{j=1}^M theta / (theta + j - 1)."""
    theta = check_theta(theta)
    if M < 1:
        raise DomainError(f'Size must be >= 1, got {M}')
    return math.fsum(theta / (theta + np.arange(M, dtype=np.float64)))


def sample_partition(n: int, theta: float, stream: np.random.Generator) -> Partition:
    """Sequential (Chinese restaurant) draw from the Ewens law on partitions of n.

    Individual j opens a new type with probability theta / (theta + j - 1); otherwise it copies the
    type of a uniformly chosen earlier individual, i.e. joins a type with probability proportional
    to its current size.
    """
    theta = check_theta(theta)
    if n < 1:
        raise DomainError(f'Sample size must be >= 1, got {n}')
    j = np.arange(n, dtype=np.float64)
    opens = (stream.random(n) < theta / (theta + j)).tolist()
    picks = (stream.random(n) * j).astype(np.int64).tolist()

    labels = [0] * n
    n_types = 0
    for idx in range(n):
        if opens[idx]:
            labels[idx] = n_types
            n_types += 1
        else:
            labels[idx] = labels[picks[idx]]

    sizes = np.bincount(labels)
    freq = np.bincount(sizes)
    return Partition({i: int(c) for i, c in enumerate(freq) if i > 0 and c > 0})


def subsample_partition(p: Partition, n: int, stream: np.random.Generator) -> Partition:
    """Draw n individuals without replacement and return the induced partition."""
    if not (1 <= n <= p.n):
        raise DomainError(f'Subsample size {n} must lie in [1, {p.n}]')
    if n == p.n:
        return p
    counts = stream.multivariate_hypergeometric(p.sizes(), n)
    return Partition.from_sizes(counts[counts > 0])


def _integer_partitions(n: int, largest: int):
    if n == 0:
        yield []
        return
    for part in range(min(n, largest), 0, -1):
        for rest in _integer_partitions(n - part, part):
            yield [part] + rest


def enumerate_partitions(n: int, cap: int = ENUMERATION_CAP) -> List[Partition]:
    """Every partition of n exactly once, largest part first in lexicographic order."""
    if n < 1:
        raise DomainError(f'Cannot enumerate partitions of {n}')
    if n > cap:
        raise ResourceError(f'Enumeration of partitions of {n} exceeds cap {cap}')
    return [Partition.from_sizes(parts) for parts in _integer_partitions(n, n)]


def ewens_pmf_table(n: int, theta: float, cap: int = ENUMERATION_CAP) -> pl.DataFrame:
    """Exact partition-level PMF as a table with columns s, k, prob."""
    parts = enumerate_partitions(n, cap)
    return pl.DataFrame({
        's': [format_partition(p) for p in parts],
        'k': [p.k for p in parts],
        'prob': [math.exp(ewens_log_pmf(p, theta)) for p in parts],
    })


def format_partition(p: Partition) -> str:
    return ';'.join(f'{i}:{c}' for i, c in p.items())


def parse_partition(text: str) -> Partition:
    s: Dict[int, int] = {}
    try:
        for pair in text.strip().split(';'):
            i, c = pair.split(':')
            i, c = int(i), int(c)
            if i in s:
                raise DomainError(f'Part size {i} repeated in "{text}"')
            s[i] = c
    except ValueError as e:
        raise DomainError(f'Cannot parse partition "{text}": {e}') from e
    return Partition(s)


def total_variation(counts: Mapping, probs: Mapping) -> float:
    """Total-variation distance between empirical counts and an exact distribution."""
    total = sum(counts.values())
    if total <= 0:
        raise DomainError('Empirical counts are empty')
    keys = set(counts) | set(probs)
    return 0.5 * math.fsum(abs(counts.get(key, 0) / total - probs.get(key, 0.0)) for key in keys)
