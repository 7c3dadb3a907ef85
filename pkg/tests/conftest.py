import numpy as np
import pytest

from ptbounds.config import load_tolerances


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def reference_spectrum():
    return np.array([15, 10, 5, 4, 3, 3, 2, 2, 1]) / 45


@pytest.fixture(autouse=True)
def fresh_tolerances(monkeypatch):
    monkeypatch.delenv("PTBOUNDS_TOL", raising=False)
    monkeypatch.delenv("PTBOUNDS_CLASS_GUARD", raising=False)
    load_tolerances.cache_clear()
    yield
    load_tolerances.cache_clear()
