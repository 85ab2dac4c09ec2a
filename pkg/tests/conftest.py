from pathlib import Path

import hypothesis
import pytest

from bipan.fixtures import battery_model

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile("ci")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def f1():
    return battery_model()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
