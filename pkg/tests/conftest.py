import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dhomotopy.spaces import (FiniteMetricSpace, MetricGraph, graph_to_space, projective_plane,
                              sample_circle, validate_metric, wedge)


@pytest.fixture
def c4():
    return sample_circle(4, 4)


@pytest.fixture
def triangle():
    return validate_metric([[0, 1, 1], [1, 0, 1], [1, 1, 0]])


@pytest.fixture
def circle12():
    return sample_circle(3, 12)


@pytest.fixture
def tree_space():
    g = MetricGraph(5, ((0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (3, 4, 1.0)))
    return graph_to_space(g, 1.0)


@pytest.fixture
def rp2():
    return projective_plane()


@pytest.fixture
def wedge16():
    return wedge(sample_circle(1, 16), sample_circle(2, 16))


def random_space(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    """Shortest-path metric of a random weighted graph; small integer weights give ties."""
    w = rng.integers(1, 4, size=(n, n)).astype(float)
    keep = rng.random((n, n)) < 0.6
    w = np.where(keep, w, np.inf)
    w = np.minimum(w, w.T)
    np.fill_diagonal(w, 0)
    for i in range(n - 1):  # path keeps it connected
        w[i, i + 1] = w[i + 1, i] = min(w[i, i + 1], 3.0)
    d = w.copy()
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return validate_metric(d)


def random_loop(rng: np.random.Generator, space, sp, steps: int) -> tuple[int, ...]:
    """Random walk in the Rips graph from the base point, closed by a tree path."""
    from dhomotopy.rips import RipsComplex
    cx = RipsComplex.of(space, sp)
    b = space.basepoint
    walk = [b]
    for _ in range(steps):
        nb = list(cx.neighbors[walk[-1]])
        if not nb:
            break
        walk.append(int(rng.choice(nb)))
    back = cx.tree(b).path_to_root(walk[-1])
    return tuple(walk + back[1:])


@pytest.fixture
def rng():
    return np.random.default_rng(20260214)


def annulus_space(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    """Noisy planar annulus sample (Euclidean metric, generic distances)."""
    t = np.sort(rng.random(n)) * 2 * np.pi
    r = 1 + 0.3 * rng.random(n)
    p = np.c_[r * np.cos(t), r * np.sin(t)]
    d = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1))
    return validate_metric(d)


def random_word_loop(rng: np.random.Generator, space, sp, length: int) -> tuple[int, ...]:
    """Loop spelling a random word in the presentation generators (partial if disconnected)."""
    from dhomotopy.rips import presentation
    p = presentation(space, sp, partial=True)
    if not p.ngens:
        return (space.basepoint,)
    word = [int(rng.integers(1, p.ngens + 1)) * int(rng.choice([-1, 1])) for _ in range(length)]
    return tuple(p.word_loop(word))
