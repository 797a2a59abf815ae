import numpy as np
import pytest


def random_interior(rng, kind, n, min_gap=0.3, max_gap=1.5):
    """A random strictly interior configuration of the requested chamber."""
    if kind == "A":
        gaps = rng.uniform(min_gap, max_gap, n - 1)
        top = rng.uniform(-1.0, 1.0)
        return top - np.concatenate([[0.0], np.cumsum(gaps)])
    if kind == "B":
        gaps = rng.uniform(min_gap, max_gap, n - 1)
        xn = rng.uniform(min_gap, 1.0)
        return xn + np.concatenate([np.cumsum(gaps[::-1])[::-1], [0.0]])
    if n > 2:
        gaps = rng.uniform(min_gap, max_gap, n - 2)
        xm = rng.uniform(0.4, 1.2)
        head = xm + np.concatenate([np.cumsum(gaps[::-1])[::-1], [0.0]])
    else:
        xm = rng.uniform(0.4, 1.2)
        head = np.array([xm])
    xn = rng.uniform(-0.9, 0.9) * xm
    return np.concatenate([head, [xn]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
