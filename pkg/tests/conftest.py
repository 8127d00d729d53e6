import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scc_caching.model import HomogeneousConfig, SystemConfig, validate_config


def random_config(rng, max_weak=6, max_strong=6, num_strong=None, equal_strong=False):
    """Random valid heterogeneous config with strictly ordered erasures."""
    K_w = int(rng.integers(1, max_weak + 1))
    K_s = int(rng.integers(1, max_strong + 1)) if num_strong is None else num_strong
    weak = np.sort(rng.uniform(0.5, 0.95, K_w))[::-1]
    if equal_strong:
        strong = np.full(K_s, rng.uniform(0.02, 0.45))
    else:
        strong = np.sort(rng.uniform(0.02, 0.45, K_s))[::-1]
    erasures = tuple(float(x) for x in np.concatenate([weak, strong]))
    K = K_w + K_s
    return validate_config(SystemConfig(K_w, K_s, K + int(rng.integers(0, 5)), int(rng.integers(1, 50)), erasures))


def random_homogeneous(rng, max_weak=10, max_strong=10):
    K_w = int(rng.integers(1, max_weak + 1))
    K_s = int(rng.integers(1, max_strong + 1))
    dw = float(rng.uniform(0.3, 0.95))
    ds = float(rng.uniform(0.0, dw - 0.05))
    return HomogeneousConfig(K_w, K_s, K_w + K_s, int(rng.integers(1, 50)), dw, ds)


@pytest.fixture
def example1():
    return HomogeneousConfig(3, 2, 5, 10, 0.8, 0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
