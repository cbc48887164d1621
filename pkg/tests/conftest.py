import numpy as np
import pytest

from robustenet import kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile (or load cached) jit kernels once so per-test timings are stable
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(20240915)
