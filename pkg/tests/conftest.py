import pytest

from bartnikmass.conformal import bump_metric, round_metric
from bartnikmass.mspath import build_ms_path, linear_start_profile


@pytest.fixture(scope="session")
def round_cm():
    return round_metric(1.0)


@pytest.fixture(scope="session")
def bump_cm():
    return bump_metric(2, 0, 0.05)


@pytest.fixture(scope="session")
def round_path(round_cm):
    return build_ms_path(round_cm)


@pytest.fixture(scope="session")
def bump_path(bump_cm):
    return build_ms_path(bump_cm)


@pytest.fixture(scope="session")
def bump_path_linear(bump_cm):
    return build_ms_path(bump_cm, linear_start_profile())
