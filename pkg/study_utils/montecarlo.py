"""Replication engine and summary statistics for the relative bias / RRMSE / negative-rate study."""
import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ewens_utils.config import ClipPolicy, ExperimentConfig, cells
from ewens_utils.errors import DomainError, EwensError, ExperimentError
from ewens_utils.estimators import estimate_by_name
from ewens_utils.partition import expected_num_types, expected_size_index, sample_partition, subsample_partition

__all__ = ['CellSummary', 'CellStats', 'replication_stream', 'true_value', 'run_replication', 'summarize_cell',
           'run_experiment']

_logger = logging.getLogger(__name__)

# blocks handed to one worker call, per worker
_BLOCKS_PER_WORKER = 4


@dataclass(frozen=True)
class CellSummary:
    n: int
    theta: float
    N: int
    i: int
    estimator: str
    reps: int
    seed: int
    rb_percent: float
    rrmse_percent: float
    neg_rate: float
    mc_se_rb: float
    failed: int = 0


class CellStats(NamedTuple):
    rb_percent: float
    rrmse_percent: float
    neg_rate: float
    mc_se_rb: float


def replication_stream(seed: int, cell_index: int, rep_index: int) -> np.random.Generator:
    """Counter-based stream for one replication; depends only on (seed, cell, replication)."""
    ss = np.random.SeedSequence(seed, spawn_key=(cell_index, rep_index))
    return np.random.Generator(np.random.Philox(ss))


# estimates depend on the data only through (k, n)
_cached_estimate = functools.lru_cache(maxsize=None)(estimate_by_name)


def true_value(estimator: str, theta: float, i: int, N: int) -> float:
    if estimator == 'eta':
        return expected_num_types(theta, N)
    return expected_size_index(theta, i, N)


def run_replication(n: int, theta: float, N: int, i: int, estimators: Sequence[str], policy: ClipPolicy,
                    stream: np.random.Generator, subsample: bool = False) -> List[Tuple[str, float, str]]:
    """One simulated sample of size n and every requested estimate computed from its K_n."""
    if subsample:
        partition = subsample_partition(sample_partition(N, theta, stream), n, stream)
    else:
        partition = sample_partition(n, theta, stream)
    k = partition.k
    out = []
    for name in estimators:
        record = _cached_estimate(name, k, n, i, N, policy)
        out.append((name, record.value, record.branch.value))
    return out


def summarize_cell(values: Sequence[float], truth: float) -> CellStats:
    """Relative bias and relative RMSE in percent, fraction of negative estimates, MC error of the RB."""
    if not truth > 0.0:
        raise DomainError(f'True value must be positive, got {truth}')
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DomainError('Cannot summarise an empty set of estimates')
    m = v.size
    err = v - truth
    rb = math.fsum(err) / m / truth * 100.0
    rrmse = math.sqrt(math.fsum(err * err) / m) / truth * 100.0
    neg_rate = int(np.count_nonzero(v < 0.0)) / m
    if m > 1:
        mean = math.fsum(v) / m
        var = math.fsum((v - mean) ** 2) / (m - 1)
        se = math.sqrt(var / m) / truth * 100.0
    else:
        se = 0.0
    return CellStats(rb, rrmse, neg_rate, se)


def _run_block(n: int, theta: float, N: int, i: int, estimators: Tuple[str, ...], policy: ClipPolicy, seed: int,
               cell_index: int, rep_start: int, rep_stop: int, subsample: bool):
    values = np.full((rep_stop - rep_start, len(estimators)), np.nan)
    diagnostics = []
    for row, rep in enumerate(range(rep_start, rep_stop)):
        stream = replication_stream(seed, cell_index, rep)
        try:
            results = run_replication(n, theta, N, i, estimators, policy, stream, subsample)
        except EwensError as e:
            diagnostics.append(f'n={n} theta={theta} rep={rep}: {type(e).__name__}: {e}')
            continue
        values[row] = [value for _, value, _ in results]
    return values, diagnostics


def _blocks(reps: int, workers: int) -> List[Tuple[int, int]]:
    size = max(1, math.ceil(reps / (workers * _BLOCKS_PER_WORKER)))
    return [(start, min(start + size, reps)) for start in range(0, reps, size)]


def _run_cell(executor: Optional[ProcessPoolExecutor], config: ExperimentConfig, cell_index: int, n: int,
              theta: float, estimators: Tuple[str, ...], policy: ClipPolicy):
    jobs = [(n, theta, config.N, config.target_index, estimators, policy, config.seed, cell_index, start, stop,
             bool(config.subsample)) for start, stop in _blocks(config.reps, config.workers)]
    if executor is None:
        results = [_run_block(*job) for job in jobs]
    else:
        futures = [executor.submit(_run_block, *job) for job in jobs]
        results = [f.result() for f in futures]
    values = np.concatenate([r[0] for r in results], axis=0)
    diagnostics = [d for r in results for d in r[1]]
    return values, diagnostics


def run_experiment(config: ExperimentConfig) -> List[CellSummary]:
    """Run every (n, theta) cell and summarise each requested estimator.

    Rows come out n ascending, theta ascending, estimators in declared order; results do not depend
    on config.workers. Aborted replications are left out of the summaries and reported through
    ExperimentError once all cells have run.
    """
    config.validate()
    policy = config.policy
    estimators = tuple(config.estimators)
    grid = cells(config)

    _logger.info("=" * 60)
    _logger.info(f"Monte Carlo study: {len(grid)} cells x {config.reps} reps, estimators {', '.join(estimators)}")
    _logger.info(f"Config digest: {config.digest()}")
    _logger.info("=" * 60)

    summaries: List[CellSummary] = []
    all_diagnostics: List[str] = []
    executor = ProcessPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for cell_index, (n, theta) in enumerate(grid):
            values, diagnostics = _run_cell(executor, config, cell_index, n, theta, estimators, policy)
            all_diagnostics.extend(diagnostics)
            ok = ~np.isnan(values).any(axis=1)
            failed = int(values.shape[0] - np.count_nonzero(ok))
            for col, name in enumerate(estimators):
                truth = true_value(name, theta, config.target_index, config.N)
                if failed == values.shape[0]:
                    stats = CellStats(math.nan, math.nan, math.nan, math.nan)
                else:
                    stats = summarize_cell(values[ok, col], truth)
                summaries.append(CellSummary(n=n, theta=theta, N=config.N, i=config.target_index, estimator=name,
                                             reps=config.reps, seed=config.seed, rb_percent=stats.rb_percent,
                                             rrmse_percent=stats.rrmse_percent, neg_rate=stats.neg_rate,
                                             mc_se_rb=stats.mc_se_rb, failed=failed))
            _logger.info(f"Cell {cell_index + 1}/{len(grid)} (n={n}, theta={theta:g}) done, {failed} aborted")
    finally:
        if executor is not None:
            executor.shutdown()

    if all_diagnostics:
        for d in all_diagnostics[:20]:
            _logger.warning(d)
        raise ExperimentError(f'{len(all_diagnostics)} replication(s) aborted', summaries=summaries,
                              diagnostics=all_diagnostics)
    _logger.info("✅ Monte Carlo study complete")
    return summaries
