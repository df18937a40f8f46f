import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gsinterp.graph import gft_basis, make_graph


@pytest.fixture
def path4():
    """Unit-weight path graph on 4 vertices."""
    return make_graph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])


@pytest.fixture
def path4_basis(path4):
    return gft_basis(path4)


@pytest.fixture
def cycle4():
    return make_graph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])


def random_sym(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
