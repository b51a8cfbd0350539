import os
import random

import pytest

RW_SEED = int(os.environ.get("RW_SEED", "20260809"))


@pytest.fixture
def rng():
    return random.Random(RW_SEED)


def pytest_report_header(config):
    return f"RW_SEED={RW_SEED}"
