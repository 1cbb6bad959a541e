import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vcselnet import harness  # noqa: E402
from vcselnet.config import DESK  # noqa: E402


@pytest.fixture(scope="session")
def desk_links():
    """(scenario, H, link) for the first 100 desk seeds."""
    return [harness.prepare(DESK, s) for s in range(100)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
