import numpy as np
import pytest

from ssgkit import Game


def make_game(lr, lp, fr, fp, steps=1, units=1):
    lr = np.atleast_1d(np.asarray(lr, dtype=float))
    return Game(len(lr), steps, units, lr,
                np.asarray(lp, dtype=float), np.asarray(fr, dtype=float),
                np.asarray(fp, dtype=float))


def random_game(rng, n=None, m=None, k=None):
    n = n or int(rng.integers(2, 9))
    m = m or int(rng.integers(1, 3))
    k = k or int(rng.integers(1, n + 1))
    return Game(n, m, k,
                rng.uniform(0.05, 1.0, n), rng.uniform(-1.0, -0.05, n),
                rng.uniform(0.05, 1.0, n), rng.uniform(-1.0, -0.05, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
