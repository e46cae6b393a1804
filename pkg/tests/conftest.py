import numpy as np
import pytest


@pytest.fixture
def gen() -> np.random.Generator:
    """Fresh deterministic generator, one per test."""
    return np.random.default_rng(20260819)


@pytest.fixture(autouse=True)
def _scrub_seed_env(monkeypatch):
    # the ambient environment must never steer a test's seed
    monkeypatch.delenv("FIDBENCH_SEED", raising=False)
