import random

import pytest

from metershare.abb import Engine
from metershare.shamir import SharingParams


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture
def engine():
    return Engine(SharingParams(3, 1), seed=11)


@pytest.fixture
def engine5():
    return Engine(SharingParams(5, 2), seed=13)
