import pytest

from uavcov.model import default_params


@pytest.fixture
def params():
    """Baseline scenario parameters."""
    return default_params()
