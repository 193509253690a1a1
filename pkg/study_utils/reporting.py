"""CSV and JSON emission; numbers are written with 9 significant digits, probabilities with 15."""
import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import polars as pl

from ewens_utils.estimators import EstimateRecord, EstimatorKind
from ewens_utils.partition import Partition, ewens_pmf_table, format_partition, kn_pmf

from .montecarlo import CellSummary

__all__ = ['OUTPUT_DIR_ENV', 'DEFAULT_OUTPUT_DIR', 'PMF_DIGITS', 'SUMMARY_COLUMNS', 'default_output_dir',
           'format_number', 'to_csv', 'summary_frame', 'write_summary_csv', 'RunManifest', 'timestamp', 'write_manifest',
           'kn_pmf_frame', 'partition_pmf_frame', 'estimate_frame', 'sample_frame', 'check_frame']

_logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'EWENS_OUTPUT_DIR'
DEFAULT_OUTPUT_DIR = 'results'

# probabilities keep more digits so a printed PMF still sums to 1 within 1e-10
PMF_DIGITS = 15

SUMMARY_COLUMNS = ['n', 'theta', 'N', 'i', 'estimator', 'reps', 'seed',
                   'rb_percent', 'rrmse_percent', 'neg_rate', 'mc_se_rb']


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


def format_number(x: float, digits: int = 9) -> str:
    x = float(x)
    if math.isnan(x):
        return 'nan'
    if x == 0.0:
        return '0'  # also folds -0.0
    return f'{x:.{digits}g}'


def _text_columns(columns: dict) -> pl.DataFrame:
    return pl.DataFrame({name: pl.Series(name, values, dtype=pl.Utf8) for name, values in columns.items()})


def to_csv(df: pl.DataFrame) -> str:
    return df.write_csv()


def summary_frame(summaries: Sequence[CellSummary]) -> pl.DataFrame:
    return _text_columns({
        'n': [str(s.n) for s in summaries],
        'theta': [format_number(s.theta) for s in summaries],
        'N': [str(s.N) for s in summaries],
        'i': [str(s.i) for s in summaries],
        'estimator': [s.estimator for s in summaries],
        'reps': [str(s.reps) for s in summaries],
        'seed': [str(s.seed) for s in summaries],
        'rb_percent': [format_number(s.rb_percent) for s in summaries],
        'rrmse_percent': [format_number(s.rrmse_percent) for s in summaries],
        'neg_rate': [format_number(s.neg_rate) for s in summaries],
        'mc_se_rb': [format_number(s.mc_se_rb) for s in summaries],
    })


def write_summary_csv(summaries: Sequence[CellSummary], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary_frame(summaries).write_csv(path)
    _logger.info(f"Wrote {len(summaries)} summary rows to {path}")
    return path


@dataclass
class RunManifest:
    tool_version: str
    config_digest: str
    seed: int
    started: str
    finished: str
    row_count: int


def timestamp() -> str:
    return datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def kn_pmf_frame(n: int, theta: float) -> pl.DataFrame:
    probs = kn_pmf(n, theta)
    return _text_columns({
        'k': [str(k) for k in range(1, n + 1)],
        'prob': [format_number(p, PMF_DIGITS) for p in probs],
    })


def partition_pmf_frame(n: int, theta: float) -> pl.DataFrame:
    table = ewens_pmf_table(n, theta)
    return _text_columns({
        's': table['s'].to_list(),
        'k': [str(k) for k in table['k'].to_list()],
        'prob': [format_number(p, PMF_DIGITS) for p in table['prob'].to_list()],
    })


def estimate_frame(records: Iterable[EstimateRecord], k: int, n: int, N: int) -> pl.DataFrame:
    records = list(records)
    columns = {
        'estimator': [r.kind.value for r in records],
        'i': [None if r.index is None else str(r.index) for r in records],
        'k': [str(k)] * len(records),
        'n': [str(n)] * len(records),
        'N': [str(N)] * len(records),
        'value': [format_number(r.raw_value if r.kind is EstimatorKind.RISK else r.value) for r in records],
        'theta_used': [format_number(r.theta_used) for r in records],
        'branch': [r.branch.value for r in records],
    }
    if any(r.kind is EstimatorKind.RISK for r in records):
        columns['f'] = [None if r.sampling_fraction is None else format_number(r.sampling_fraction) for r in records]
        columns['risk'] = [format_number(r.value) if r.kind is EstimatorKind.RISK else None for r in records]
    return _text_columns(columns)


def sample_frame(partitions: List[Partition]) -> pl.DataFrame:
    return _text_columns({
        'rep': [str(r) for r in range(1, len(partitions) + 1)],
        'k': [str(p.k) for p in partitions],
        's': [format_partition(p) for p in partitions],
    })


def check_frame(rows: List[tuple]) -> pl.DataFrame:
    return _text_columns({
        'check': [r[0] for r in rows],
        'status': ['pass' if r[1] else 'FAIL' for r in rows],
        'detail': [r[2] for r in rows],
    })
