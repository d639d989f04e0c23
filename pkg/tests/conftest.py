import numpy as np
import pytest

from torusdimer.torus_graph import build_square_torus, temperleyan


@pytest.fixture(scope="session")
def square2():
    return build_square_torus(2, (0, 2))


@pytest.fixture(scope="session")
def tg2(square2):
    return temperleyan(square2)


def random_conductance(seed):
    rng = np.random.default_rng(seed)
    cache = {}

    def c(p, q, tag):
        key = (p, q, tag)
        if key not in cache:
            cache[key] = float(rng.uniform(0.05, 1.0))
        return cache[key]

    return c


def symmetric_conductance(seed, n, sx, sy):
    """Equal weight on an edge and its reverse: keyed by the axis and the
    normalized tail of the eastward/northward direction, which both
    directions share even across the wrap."""
    rng = np.random.default_rng(seed)
    cache = {}

    def norm(p, q):
        q2 = q % sy
        p2 = (p - ((q - q2) // sy) * sx) % n
        return p2, q2

    def c(p, q, tag):
        if tag == "E":
            key = ("H",) + norm(p, q)
        elif tag == "W":
            key = ("H",) + norm(p - 1, q)
        elif tag == "N":
            key = ("V",) + norm(p, q)
        else:
            key = ("V",) + norm(p, q - 1)
        if key not in cache:
            cache[key] = float(rng.uniform(0.05, 1.0))
        return cache[key]

    return c


@pytest.fixture(scope="session")
def square2_random():
    return build_square_torus(2, (0, 2), conductance=random_conductance(42))
