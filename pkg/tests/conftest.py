import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def random_grow_trees(count, max_depth, rng, size_cap=None):
    """Grow-method trees, optionally rejecting those above size_cap."""
    from gpmux.genome import random_tree

    out = []
    while len(out) < count:
        t = random_tree(max_depth, "grow", rng)
        if size_cap is None or len(t) <= size_cap:
            out.append(t)
    return out
