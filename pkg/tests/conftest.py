from functools import lru_cache

import pytest

from xychain.oracle import FiniteChain, ground_state


@lru_cache(maxsize=None)
def ed_state(n, gamma, h):
    return ground_state(FiniteChain(n, gamma, h))


@pytest.fixture
def ed():
    return ed_state
