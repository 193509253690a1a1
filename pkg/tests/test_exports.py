import pytest

import ewens_utils
import study_utils


@pytest.mark.parametrize('package', [ewens_utils, study_utils])
def test_star_imports_do_not_leak_helpers(package):
    for name in ('np', 'pl', 'math', 'gammaln', 'bisect', 'json', 'logging', 'functools', 'dataclass'):
        assert not hasattr(package, name), name


def test_public_names_are_reexported():
    assert ewens_utils.solve_mle(2, 3).is_interior
    assert ewens_utils.DomainError is ewens_utils.errors.DomainError
    assert study_utils.run_experiment is study_utils.montecarlo.run_experiment
    assert study_utils.write_manifest is study_utils.reporting.write_manifest
