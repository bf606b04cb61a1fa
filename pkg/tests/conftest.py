import numpy as np
import pytest

from rbsde_lab import Mark, binary_lattice, random_obstacle

MARK = Mark("u", -0.3, 0.2)


def lattice_suite():
    """N in {1,2,3}, binary with and without one mark."""
    return [binary_lattice(N, 1.0, marks) for N in (1, 2, 3) for marks in ((), (MARK,))]


def instances(count, seed=0, suite=None):
    """Seeded (lattice, frozen driver values, obstacle with right jumps) triples."""
    suite = suite or lattice_suite()
    rng = np.random.default_rng(seed)
    for i in range(count):
        lat = suite[i % len(suite)]
        xi = random_obstacle(lat, rng)
        f = rng.uniform(-1.0, 1.0, lat.n_nodes)
        yield lat, f, xi


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def marked():
    return binary_lattice(1, 1.0, [Mark("u", 0.0, 0.2)])


def dominating(lat, xi, rng, scale=1.0):
    """An obstacle above ``xi`` on both sides, by independent nonnegative bumps."""
    from rbsde_lab import make_obstacle

    v = xi.v + scale * rng.random(lat.n_nodes)
    vplus = xi.vplus + scale * rng.random(lat.n_nodes)
    return make_obstacle(lat, (v, vplus), v[lat.leaves])
