"""Lipschitz drivers ``f(t, y, z, psi)`` and a small named registry."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import Lattice


@dataclass(frozen=True)
class Driver:
    """Vectorised generator.

    ``fn(t, y, z, psi, nodes)`` receives arrays over a batch of nodes (``psi``
    has one column per mark) and returns the driver values. ``frozen`` marks
    drivers that ignore ``(y, z, psi)``.
    """

    fn: Callable
    lipschitz_K: float
    label: str
    frozen: bool = False

    def eval(self, t, y, z, psi, nodes=None):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return np.broadcast_to(
            np.asarray(self.fn(t, y, np.atleast_1d(z), np.atleast_2d(psi), nodes), dtype=float),
            y.shape,
        )

    def at_nodes(self, lat: Lattice, nodes, y, z, psi):
        nodes = np.asarray(nodes)
        return self.eval(lat.grid[lat.node_level[nodes]], y, z, psi, nodes)


def _offset(c):
    if np.ndim(c) == 0:
        c = float(c)
        return lambda nodes: c
    arr = np.asarray(c, dtype=float)
    return lambda nodes: arr[nodes]


def frozen_driver(values, label="frozen"):
    """Driver equal to a given value per node, independent of ``(y, z, psi)``."""
    off = _offset(values)
    return Driver(lambda t, y, z, psi, nodes: off(nodes) + 0.0 * y, 0.0, label, frozen=True)


def zero_driver():
    return frozen_driver(0.0, label="zero")


def linear_driver(lat: Lattice, rho=0.0, a=0.0, b=0.0, c=0.0):
    """``-rho y + a z + b sum_u psi(u) mu(u) + c`` with ``c`` a scalar or per-node array."""
    mu = lat.marks.intensities
    off = _offset(c)
    K = max(abs(rho), abs(a), abs(b) * np.sqrt(mu.sum()))

    def fn(t, y, z, psi, nodes):
        return -rho * y + a * z + b * (psi @ mu) + off(nodes)

    return Driver(fn, float(K), f"linear(rho={rho}, a={a}, b={b})",
                  frozen=(rho == 0 and a == 0 and b == 0))


def sine_driver(lat: Lattice, kappa=1.0, c=0.0):
    """Bounded nonlinear driver ``kappa sin(y) + c``."""
    off = _offset(c)
    return Driver(lambda t, y, z, psi, nodes: kappa * np.sin(y) + off(nodes),
                  abs(float(kappa)), f"sin(kappa={kappa})", frozen=(kappa == 0))


DRIVERS = {
    "zero": lambda lat, **kw: zero_driver(),
    "constant": lambda lat, c=0.0: frozen_driver(c, label="constant"),
    "linear": linear_driver,
    "sin": sine_driver,
}


def make_driver(lat: Lattice, name, params=None) -> Driver:
    try:
        factory = DRIVERS[name]
    except KeyError:
        raise ValueError(f"unknown driver {name!r}; expected one of {sorted(DRIVERS)}") from None
    return factory(lat, **(params or {}))


def lipschitz_probe(driver: Driver, lat: Lattice, rng, probes=200, scale=3.0):
    """Largest observed ratio |f1 - f2| / (|dy| + |dz| + ||dpi||_{L2(mu)}) on random probes."""
    mu = lat.marks.intensities
    m = len(mu)
    nodes = rng.integers(0, lat.n_nodes, probes)
    t = lat.grid[lat.node_level[nodes]]
    y1, y2, z1, z2 = (scale * rng.standard_normal(probes) for _ in range(4))
    p1, p2 = (scale * rng.standard_normal((probes, m)) for _ in range(2))
    df = np.abs(driver.eval(t, y1, z1, p1, nodes) - driver.eval(t, y2, z2, p2, nodes))
    dist = np.abs(y1 - y2) + np.abs(z1 - z2) + np.sqrt((p1 - p2) ** 2 @ mu)
    return float(np.max(df / dist))
