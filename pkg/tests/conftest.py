import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from repcov import RepeatedData


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_data(rng, m=5, sizes=None, p=3):
    """Gaussian grouped data with mild cross-correlation."""
    if sizes is None:
        sizes = [4] * m
    root = rng.standard_normal((p, p)) * 0.3 + np.eye(p)
    blocks = []
    for i, n in enumerate(sizes):
        b = rng.standard_normal(p)
        eps = rng.standard_normal((n, p)) @ root.T
        blocks.append((f"s{i}", b + eps))
    return RepeatedData.from_arrays(blocks)


@pytest.fixture
def grouped(rng):
    return random_data(rng, m=5, sizes=[4, 4, 4, 4, 4], p=3)


@pytest.fixture
def unbalanced(rng):
    return random_data(rng, m=6, sizes=[2, 3, 5, 2, 4, 8], p=4)
