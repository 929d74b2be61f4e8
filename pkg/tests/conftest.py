import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from ecmkit import SHIPPED_MACHINES, load_machine


@pytest.fixture(scope="session")
def machines():
    return {name: load_machine(name) for name in SHIPPED_MACHINES}


@pytest.fixture(scope="session")
def bdw(machines):
    return machines["bdw"]


@pytest.fixture(scope="session")
def hsw(machines):
    return machines["hsw"]


@pytest.fixture(scope="session")
def snb(machines):
    return machines["snb"]


@pytest.fixture(scope="session")
def ivb(machines):
    return machines["ivb"]
