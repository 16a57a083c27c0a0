from pathlib import Path

import numpy as np
import pytest

from spltrace.model import parse_model
from spltrace.world import build_world

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "fixtures" / "telecom.spl"


@pytest.fixture(scope="session")
def telecom_text():
    return FIXTURE.read_text()


@pytest.fixture(scope="session")
def telecom_model(telecom_text):
    return parse_model(telecom_text)


@pytest.fixture
def telecom(telecom_model):
    return build_world(telecom_model)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0][1:])):
            terminalreporter.write_line(f"{ACCEPTANCE_RESULTS[key]}  {key}")
