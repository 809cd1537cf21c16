import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "wfdb"


@pytest.fixture
def fixture_dir():
    return FIXTURES
