"""Command-line entry point: pmf, estimate, risk, sample, simulate and selftest subcommands."""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from ewens_utils import __version__
from ewens_utils.config import ESTIMATOR_NAMES, ClipPolicy, ExperimentConfig
from ewens_utils.errors import ConfigError, DomainError, EwensError, ExperimentError
from ewens_utils.estimators import (EstimatorKind, estimate_population_num_types, estimate_size_indices,
                                    population_unique_risk)
from ewens_utils.likelihood import solve_adjusted_mle, solve_mle
from ewens_utils.partition import (enumerate_partitions, ewens_log_pmf, expected_num_types, expected_size_index,
                                   kn_log_pmf, sample_partition)

from . import reporting
from .montecarlo import replication_stream, run_experiment

_logger = logging.getLogger(__name__)


def _check_sizes(k: int, n: int, N: int):
    if not (1 <= k <= n <= N) or n < 2:
        raise DomainError(f'Need 1 <= k <= n <= N and n >= 2, got k={k}, n={n}, N={N}')


def _policy(args) -> ClipPolicy:
    return ClipPolicy(c_plus=args.c_plus, theta_floor=args.theta_floor, eta_value_at_k1=args.eta_at_k1)


def cmd_pmf(args) -> int:
    if args.level == 'partition':
        df = reporting.partition_pmf_frame(args.n, args.theta)
    else:
        df = reporting.kn_pmf_frame(args.n, args.theta)
        if args.k is not None:
            if not (1 <= args.k <= args.n):
                raise DomainError(f'k={args.k} must lie in [1, n={args.n}]')
            df = df[args.k - 1:args.k]
    sys.stdout.write(reporting.to_csv(df))
    return 0


def cmd_estimate(args) -> int:
    _check_sizes(args.k, args.n, args.N)
    policy = _policy(args)
    if args.est == 'eta':
        records = [estimate_population_num_types(args.k, args.n, args.N, policy)]
    elif args.est == 'risk':
        records = [population_unique_risk(args.k, args.n, args.N, EstimatorKind.NM, policy)]
    else:
        records = estimate_size_indices(args.k, args.n, args.i, args.N, EstimatorKind(args.est), policy)
    sys.stdout.write(reporting.to_csv(reporting.estimate_frame(records, args.k, args.n, args.N)))
    return 0


def cmd_risk(args) -> int:
    _check_sizes(args.k, args.n, args.N)
    record = population_unique_risk(args.k, args.n, args.N, EstimatorKind(args.scheme), _policy(args))
    sys.stdout.write(reporting.to_csv(reporting.estimate_frame([record], args.k, args.n, args.N)))
    return 0


def cmd_sample(args) -> int:
    if args.count < 1:
        raise DomainError(f'count must be >= 1, got {args.count}')
    if args.seed < 0:
        raise DomainError(f'seed must be non-negative, got {args.seed}')
    draws = [sample_partition(args.n, args.theta, replication_stream(args.seed, 0, rep)) for rep in range(args.count)]
    sys.stdout.write(reporting.to_csv(reporting.sample_frame(draws)))
    return 0


def cmd_simulate(args) -> int:
    overrides = dict(N=args.N, n_values=args.n_values, theta_values=args.theta_values, reps=args.reps,
                     seed=args.seed, target_index=args.i, estimators=args.estimators, c_plus=args.c_plus,
                     theta_floor=args.theta_floor, workers=args.workers, subsample=args.subsample or None)
    if args.config is not None:
        config = ExperimentConfig.from_file(args.config, **overrides)
    else:
        config = ExperimentConfig(**overrides)
    config.validate()

    out_dir = Path(args.out) if args.out is not None else reporting.default_output_dir()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f'Cannot create output directory {out_dir}: {e}') from e

    started = reporting.timestamp()
    status = 0
    try:
        summaries = run_experiment(config)
    except ExperimentError as e:
        summaries = e.summaries
        _logger.error(f"{e}; summaries written for the replications that completed")
        status = 1

    try:
        reporting.write_summary_csv(summaries, out_dir / 'summary.csv')
        manifest = reporting.RunManifest(tool_version=__version__, config_digest=config.digest(), seed=config.seed,
                                         started=started, finished=reporting.timestamp(), row_count=len(summaries))
        reporting.write_manifest(manifest, out_dir / 'manifest.json')
    except OSError as e:
        raise ConfigError(f'Cannot write results to {out_dir}: {e}') from e
    return status


def selftest_checks() -> List[tuple]:
    """Exact oracles: (name, passed, detail) rows."""
    rows = []

    worst = 0.0
    for n in range(1, 11):
        for theta in (0.1, 1.0, 5.0, 50.0):
            total = math.fsum(math.exp(ewens_log_pmf(p, theta)) for p in enumerate_partitions(n))
            worst = max(worst, abs(total - 1.0))
    rows.append(('normalization', worst < 1e-10, f'max |sum - 1| = {worst:.3g}'))

    worst = 0.0
    for n in range(1, 11):
        parts = enumerate_partitions(n)
        for theta in (0.1, 1.0, 5.0, 50.0):
            for k in range(1, n + 1):
                mass = math.fsum(math.exp(ewens_log_pmf(p, theta)) for p in parts if p.k == k)
                worst = max(worst, abs(mass - math.exp(kn_log_pmf(n, k, theta))))
    rows.append(('aggregation', worst < 1e-10, f'max deviation = {worst:.3g}'))

    theta_ml = solve_mle(2, 3).theta
    rows.append(('mle_closed_form', abs(theta_ml - math.sqrt(2.0)) < 1e-10, f'theta_ML(2, 3) = {theta_ml:.12g}'))
    theta_a = solve_adjusted_mle(2, 2).theta
    rows.append(('adjusted_closed_form', abs(theta_a - 1.0) < 1e-10, f'theta_A(2, 2) = {theta_a:.12g}'))

    worst = 0.0
    for theta in (0.1, 1.0, 10.0):
        for N in (10, 1000):
            r = np.array([expected_size_index(theta, i, N) for i in range(1, N + 1)])
            worst = max(worst, abs(math.fsum(np.arange(1, N + 1) * r) / N - 1.0),
                        abs(math.fsum(r) / expected_num_types(theta, N) - 1.0))
    rows.append(('moment_identities', worst < 1e-10, f'max relative deviation = {worst:.3g}'))

    worst = max(abs(expected_size_index(1.0, i, 100) * i - 1.0) for i in range(1, 101))
    rows.append(('size_index_theta_one', worst < 1e-12, f'max relative deviation = {worst:.3g}'))
    return rows


def cmd_selftest(args) -> int:
    rows = selftest_checks()
    sys.stdout.write(reporting.to_csv(reporting.check_frame(rows)))
    return 0 if all(ok for _, ok, _ in rows) else 1


def _add_policy_flags(p):
    p.add_argument('--c-plus', type=float, default=1e6, help='clipping ceiling C+ (default: 1e6)')
    p.add_argument('--theta-floor', type=float, default=1e-8, help='theta used for a root below zero (default: 1e-8)')
    p.add_argument('--eta-at-k1', type=float, default=1.0, help='E[K_N] estimate when K_n = 1 (default: 1)')


class _Parser(argparse.ArgumentParser):
    """Reports usage errors on a single stderr line."""

    def error(self, message):
        self.exit(2, f'error: UsageError: {message}\n')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='ewens-size-index',
                     description='Estimate expected size indices under the Ewens sampling formula')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', default='WARNING', help='logging level on stderr (default: WARNING)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('pmf', help='exact PMF of K_n or of the whole partition')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--theta', type=float, required=True)
    p.add_argument('--level', choices=['k', 'partition'], default='k')
    p.add_argument('--k', type=int, default=None, help='emit only P(K_n = k)')
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser('estimate', help='estimate R_i (or E[K_N], or risk) from K_n = k')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--i', type=int, nargs='+', default=[1], help='size indices sharing one theta estimate')
    p.add_argument('--est', choices=['nm', 'bc1', 'bc2', 'eta', 'risk'], default='nm')
    _add_policy_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser('risk', help='population-unique risk f * R_1')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--scheme', choices=['nm', 'bc1', 'bc2'], default='nm')
    _add_policy_flags(p)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser('sample', help='draw partitions from the Ewens sampling formula')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--theta', type=float, default=1.0)
    p.add_argument('--count', type=int, default=1)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser('simulate', help='Monte Carlo study of the R_i estimators')
    p.add_argument('--config', default=None, help='flat JSON experiment config')
    p.add_argument('--out', default=None, help=f'output directory (default: ${reporting.OUTPUT_DIR_ENV} or results)')
    p.add_argument('--N', type=int, default=None)
    p.add_argument('--n-values', type=int, nargs='+', default=None)
    p.add_argument('--theta-values', type=float, nargs='+', default=None)
    p.add_argument('--reps', type=int, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--i', type=int, default=None, help='target size index')
    p.add_argument('--estimators', nargs='+', choices=list(ESTIMATOR_NAMES), default=None)
    p.add_argument('--c-plus', type=float, default=None)
    p.add_argument('--theta-floor', type=float, default=None)
    p.add_argument('--workers', type=int, default=None)
    p.add_argument('--subsample', action='store_true', help='draw size-N partitions and subsample to n')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('selftest', help='run the exact combinatorial oracles')
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format='%(asctime)s - %(levelname)s - %(message)s', datefmt='%H:%M:%S')
    try:
        return args.func(args)
    except (DomainError, ConfigError) as e:
        sys.stderr.write(f'error: {type(e).__name__}: {e}\n')
        return 2
    except EwensError as e:
        sys.stderr.write(f'error: {type(e).__name__}: {e}\n')
        return 1


if __name__ == '__main__':
    sys.exit(main())
