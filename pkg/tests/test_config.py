import json

import pytest

from ewens_utils.config import THETA_P1, THETA_P2, THETA_P3, ExperimentConfig, cells
from ewens_utils.errors import ConfigError


def test_defaults_cover_the_full_grid():
    config = ExperimentConfig().validate()
    assert config.N == 10_000
    assert config.n_values == [20, 100, 1000]
    assert config.theta_values == THETA_P1 + THETA_P2 + THETA_P3
    assert len(cells(config)) == 45
    assert config.estimators == ['nm', 'bc1', 'bc2']


def test_unknown_parameter_is_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig(n_reps=10)
    with pytest.raises(ConfigError):
        ExperimentConfig(validate=1)


@pytest.mark.parametrize('kwargs', [
    dict(N=1),
    dict(n_values=[1]),
    dict(n_values=[20_000]),
    dict(theta_values=[0.0]),
    dict(reps=0),
    dict(seed=-1),
    dict(target_index=0),
    dict(workers=0),
    dict(estimators=['mle']),
    dict(estimators=['nm', 'nm']),
    dict(c_plus=1e-9),
    dict(reps='many'),
])
def test_invalid_values(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs).validate()


def test_cells_are_sorted():
    config = ExperimentConfig(n_values=[100, 20], theta_values=[5.0, 1.0])
    assert cells(config) == [(20, 1.0), (20, 5.0), (100, 1.0), (100, 5.0)]


def test_digest_ignores_workers_and_order():
    a = ExperimentConfig(n_values=[20, 100], workers=1)
    b = ExperimentConfig(n_values=[100, 20], workers=8)
    assert a.digest() == b.digest()
    assert a.digest() != ExperimentConfig(seed=1).digest()
    assert len(a.digest()) == 64


def test_from_file_with_overrides(tmp_path):
    path = tmp_path / 'study.json'
    path.write_text(json.dumps({'N': 500, 'n_values': [20], 'reps': 7}))
    config = ExperimentConfig.from_file(path, reps=3, seed=None)
    assert (config.N, config.n_values, config.reps) == (500, [20], 3)
    assert config.seed == ExperimentConfig().seed


@pytest.mark.parametrize('text', ['{not json', '[1, 2]', '{"bogus": 1}'])
def test_from_file_rejects_bad_files(tmp_path, text):
    path = tmp_path / 'bad.json'
    path.write_text(text)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


def test_from_file_missing(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / 'missing.json')


def test_policy_follows_config():
    policy = ExperimentConfig(c_plus=500.0, theta_floor=1e-4).policy
    assert (policy.c_plus, policy.theta_floor) == (500.0, 1e-4)
