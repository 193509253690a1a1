"""Clipping policy and Monte Carlo experiment configuration."""
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Union

from .errors import ConfigError

_logger = logging.getLogger(__name__)

THETA_P1 = [1.0, 3.0, 5.0, 7.0, 9.0]
THETA_P2 = [10.0, 30.0, 50.0, 70.0, 90.0]
THETA_P3 = [100.0, 300.0, 500.0, 700.0, 900.0]

ESTIMATOR_NAMES = ('nm', 'bc1', 'bc2', 'eta')


@dataclass(frozen=True)
class ClipPolicy:
    """Admissible set (0, c_plus] for an estimated theta plus the values used off that set.

    value_at_k1 is returned by the size-index estimators when K_n = 1, eta_value_at_k1 by the
    estimator of E[K_N] (K_N >= 1 always, so 1 rather than the theta -> 0 limit of 0).
    """
    c_plus: float = 1e6
    theta_floor: float = 1e-8
    value_at_k1: float = 0.0
    eta_value_at_k1: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.theta_floor < self.c_plus):
            raise ConfigError(f'Clip policy needs 0 < theta_floor < c_plus, got theta_floor={self.theta_floor}, c_plus={self.c_plus}')

    def contains(self, theta: float) -> bool:
        return 0.0 < theta <= self.c_plus


class ExperimentConfig:
    """Settings for one Monte Carlo study. Defaults reproduce the full study grid."""

    def __init__(self, **kwargs):
        self._set_params()
        self._set_args(**kwargs)

    def _set_params(self):
        self.N = 10_000
        self.n_values = [20, 100, 1000]
        self.theta_values = THETA_P1 + THETA_P2 + THETA_P3
        self.reps = 10_000
        self.seed = 20240101
        self.target_index = 1
        self.estimators = ['nm', 'bc1', 'bc2']
        self.c_plus = 1e6
        self.theta_floor = 1e-8

        # validation mode: draw a size-N population partition and subsample it to n
        self.subsample = False

        self.workers = 1

    def _set_args(self, **kwargs):
        for k, v in kwargs.items():
            if v is None:
                continue
            if k not in vars(self):
                raise ConfigError(f'Invalid experiment parameter "{k}"')
            setattr(self, k, v)

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides) -> 'ExperimentConfig':
        """Load a flat JSON config, then apply non-None keyword overrides."""
        try:
            with open(path, 'r') as f:
                values = json.load(f)
        except OSError as e:
            raise ConfigError(f'Cannot read config file {path}: {e}') from e
        except json.JSONDecodeError as e:
            raise ConfigError(f'Malformed config file {path}: {e}') from e

        if not isinstance(values, dict):
            raise ConfigError(f'Config file {path} must hold a JSON object, got {type(values).__name__}')

        config = cls(**values)
        config._set_args(**overrides)
        _logger.info(f"Loaded experiment config from {path}")
        return config

    @property
    def policy(self):
        return ClipPolicy(c_plus=float(self.c_plus), theta_floor=float(self.theta_floor))

    def validate(self) -> 'ExperimentConfig':
        try:
            self.N = int(self.N)
            self.n_values = [int(n) for n in self.n_values]
            self.theta_values = [float(t) for t in self.theta_values]
            self.reps = int(self.reps)
            self.seed = int(self.seed)
            self.target_index = int(self.target_index)
            self.workers = int(self.workers)
            self.estimators = [str(e).lower() for e in self.estimators]
        except (TypeError, ValueError) as e:
            raise ConfigError(f'Invalid experiment parameter type: {e}') from e

        if self.N < 2:
            raise ConfigError(f'Population size N must be >= 2, got {self.N}')
        if not self.n_values:
            raise ConfigError('n_values must not be empty')
        for n in self.n_values:
            if not (2 <= n <= self.N):
                raise ConfigError(f'Sample size {n} must satisfy 2 <= n <= N={self.N}')
        if not self.theta_values:
            raise ConfigError('theta_values must not be empty')
        for theta in self.theta_values:
            if not theta > 0.0:
                raise ConfigError(f'Diversity theta must be positive, got {theta}')
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError(f'seed must be a non-negative 64-bit integer, got {self.seed}')
        if self.reps < 1:
            raise ConfigError(f'reps must be >= 1, got {self.reps}')
        if not (1 <= self.target_index <= self.N):
            raise ConfigError(f'target_index must lie in [1, N], got {self.target_index}')
        if self.workers < 1:
            raise ConfigError(f'workers must be >= 1, got {self.workers}')
        if not self.estimators:
            raise ConfigError('At least one estimator is required')
        for name in self.estimators:
            if name not in ESTIMATOR_NAMES:
                raise ConfigError(f'Unknown estimator "{name}", expected one of {", ".join(ESTIMATOR_NAMES)}')
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigError(f'Duplicate estimators in {self.estimators}')
        ClipPolicy(c_plus=float(self.c_plus), theta_floor=float(self.theta_floor))
        return self

    def canonical(self) -> Dict[str, object]:
        self.validate()
        return {
            'N': self.N,
            'c_plus': float(self.c_plus),
            'estimators': list(self.estimators),
            'n_values': sorted(self.n_values),
            'reps': self.reps,
            'seed': self.seed,
            'subsample': bool(self.subsample),
            'target_index': self.target_index,
            'theta_floor': float(self.theta_floor),
            'theta_values': sorted(self.theta_values),
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(blob.encode('utf-8')).hexdigest()

    def __repr__(self):
        params = ', '.join(f'{k}={v!r}' for k, v in self.canonical().items())
        return f'ExperimentConfig({params}, workers={self.workers})'


def cells(config: ExperimentConfig) -> List[tuple]:
    """(n, theta) grid in output order: n ascending, then theta ascending."""
    config.validate()
    return [(n, theta) for n in sorted(config.n_values) for theta in sorted(config.theta_values)]
