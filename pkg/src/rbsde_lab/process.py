"""Adapted làdlàg processes on a lattice, with obstacles and beta-weighted norms.

A process stores two numbers per node ``n`` at grid time ``t_k``: ``v`` is the
value at ``t_k`` and ``vplus`` is the right limit, held on the open interval
``(t_k, t_{k+1})``. The left limit at a child is therefore the parent's
``vplus``. Leaves have no interval after them and carry ``vplus == v``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Lattice


@dataclass(frozen=True)
class OptionalProcess:
    v: np.ndarray
    vplus: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        vplus = np.array(self.vplus, dtype=float)
        if v.shape != vplus.shape or v.ndim != 1:
            raise ValueError(f"v and vplus must be 1-d of equal length, got {v.shape}, {vplus.shape}")
        v.setflags(write=False)
        vplus.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "vplus", vplus)

    @classmethod
    def zeros(cls, lat: Lattice):
        return cls(np.zeros(lat.n_nodes), np.zeros(lat.n_nodes))

    @classmethod
    def constant(cls, lat: Lattice, c):
        return cls(np.full(lat.n_nodes, float(c)), np.full(lat.n_nodes, float(c)))

    @classmethod
    def right_continuous(cls, values):
        return cls(values, values)

    def __sub__(self, other):
        return OptionalProcess(self.v - other.v, self.vplus - other.vplus)

    def __add__(self, other):
        return OptionalProcess(self.v + other.v, self.vplus + other.vplus)

    def __neg__(self):
        return OptionalProcess(-self.v, -self.vplus)

    def shift(self, c):
        return OptionalProcess(self.v + c, self.vplus + c)

    @property
    def right_jump(self):
        """Size of the right jump ``vplus - v`` at every node."""
        return self.vplus - self.v

    def left_jump(self, lat: Lattice):
        """``v(n) - vplus(parent(n))``; zero at the root."""
        out = np.zeros(lat.n_nodes)
        nonroot = lat.parent >= 0
        out[nonroot] = self.v[nonroot] - self.vplus[lat.parent[nonroot]]
        return out


@dataclass(frozen=True)
class Obstacle:
    process: OptionalProcess
    flags: np.ndarray  # internal nodes with an upward right jump (v < vplus)

    @property
    def v(self):
        return self.process.v

    @property
    def vplus(self):
        return self.process.vplus

    def terminal(self, lat: Lattice):
        return self.process.v[lat.leaves]

    @property
    def is_rusc(self):
        return len(self.flags) == 0

    def lusc_violations(self, lat: Lattice, tol=0.0):
        """Nodes whose value sits strictly below the left limit from the parent."""
        nonroot = np.flatnonzero(lat.parent >= 0)
        gap = self.process.vplus[lat.parent[nonroot]] - self.process.v[nonroot]
        return nonroot[gap > tol]

    def shift(self, c):
        return Obstacle(self.process.shift(c), self.flags)


def _as_node_array(lat, source, nodes, what):
    if callable(source):
        return np.array([source(int(n)) for n in nodes], dtype=float)
    arr = np.asarray(source, dtype=float)
    if arr.ndim == 0:
        return np.full(len(nodes), float(arr))
    if arr.shape == (len(nodes),):
        return arr
    if arr.shape == (lat.n_nodes,):
        return arr[nodes]
    raise ValueError(f"{what} has shape {arr.shape}, expected ({len(nodes)},) or ({lat.n_nodes},)")


def make_obstacle(lat: Lattice, builder, terminal) -> Obstacle:
    """Assemble an obstacle and flag nodes with an upward right jump.

    ``builder`` maps a node id to ``(v, vplus)``; it may also be a pair of
    arrays over all nodes. ``terminal`` gives the leaf values (callable on
    leaf ids, an array over leaves or over all nodes, or a scalar) and
    overrides whatever ``builder`` produced at the leaves.
    """
    if callable(builder):
        pairs = np.array([builder(int(n)) for n in range(lat.n_nodes)], dtype=float)
        v, vplus = pairs[:, 0].copy(), pairs[:, 1].copy()
    else:
        v, vplus = (np.array(a, dtype=float) for a in builder)
    leaves = lat.leaves
    term = _as_node_array(lat, terminal, leaves, "terminal")
    v[leaves] = term
    vplus[leaves] = term
    internal = lat.internal
    flags = internal[v[internal] < vplus[internal]]
    return Obstacle(OptionalProcess(v, vplus), flags)


# -- named builders ---------------------------------------------------------

def _with_interval(lat, v, interval):
    vplus = v.copy()
    if interval == "lower":
        # hold the lower envelope over the coming step: no left jump can exceed v
        for k in range(lat.N):
            sl = lat.level(k)
            child_min = v[lat.level(k + 1)].reshape(-1, lat.n_branches).min(axis=1)
            vplus[sl] = np.minimum(v[sl], child_min)
    elif interval != "hold":
        raise ValueError(f"interval must be 'hold' or 'lower', got {interval!r}")
    return vplus


def constant_obstacle(lat, c=0.0):
    c = float(c)
    return make_obstacle(lat, (np.full(lat.n_nodes, c), np.full(lat.n_nodes, c)), c)


def step_obstacle(lat, c=1.0, jumps=None, levels=None):
    """Level ``c`` (or ``levels[k]`` at time index k) with a downward right jump of ``jumps[k]``."""
    v = np.full(lat.n_nodes, float(c))
    for k, value in (levels or {}).items():
        v[lat.level(int(k))] = float(value)
    vplus = v.copy()
    for k, size in (jumps or {}).items():
        k = int(k)
        if not 0 <= k < lat.N:
            raise ValueError(f"right jumps are only possible before T, got time index {k}")
        vplus[lat.level(k)] -= float(size)
    return make_obstacle(lat, (v, vplus), v[lat.leaves])


def put_obstacle(lat, strike=1.0, s0=1.0, sigma=0.3, interval="hold"):
    """American-put payoff ``(strike - s0 exp(sigma W + jumps))^+``."""
    s = s0 * np.exp(lat.state(sigma))
    v = np.maximum(strike - s, 0.0)
    return make_obstacle(lat, (v, _with_interval(lat, v, interval)), v[lat.leaves])


def path_max_obstacle(lat, strike=1.0, s0=1.0, sigma=0.3, interval="hold"):
    """Lookback payoff on the running maximum of the asset along each path."""
    s = s0 * np.exp(lat.state(sigma))
    run = s.copy()
    for k in range(1, lat.N + 1):
        sl = lat.level(k)
        run[sl] = np.maximum(s[sl], run[lat.parent[sl]])
    v = np.maximum(run - strike, 0.0)
    return make_obstacle(lat, (v, _with_interval(lat, v, interval)), v[lat.leaves])


def digital_obstacle(lat, barrier=0.0, payout=1.0, sigma=1.0):
    """``payout`` when the state is at or above ``barrier``; strictly above on intervals.

    Nodes sitting exactly on the barrier carry a downward right jump.
    """
    x = lat.state(sigma)
    v = payout * (x >= barrier - 1e-12)
    vplus = payout * (x > barrier + 1e-12)
    return make_obstacle(lat, (v, vplus), v[lat.leaves])


def random_obstacle(lat, rng, scale=1.0, right_jumps=True, lusc=False, dist="uniform"):
    """Random obstacle with downward right jumps at random nodes.

    Values are uniform on ``[-scale, scale]`` or, with ``dist="normal"``,
    Gaussian with standard deviation ``scale``.
    """
    if dist == "uniform":
        v = rng.uniform(-scale, scale, lat.n_nodes)
    elif dist == "normal":
        v = scale * rng.standard_normal(lat.n_nodes)
    else:
        raise ValueError(f"unknown dist {dist!r}")
    if lusc:
        vplus = _with_interval(lat, v, "lower")
    else:
        vplus = v.copy()
    if right_jumps:
        drop = rng.random(lat.n_nodes) < 0.5
        vplus = vplus - drop * scale * rng.random(lat.n_nodes)
    return make_obstacle(lat, (v, vplus), v[lat.leaves])


OBSTACLES = {
    "constant": constant_obstacle,
    "step": step_obstacle,
    "put": put_obstacle,
    "path_max": path_max_obstacle,
    "digital": digital_obstacle,
}


# -- beta-weighted norms ----------------------------------------------------

@dataclass(frozen=True)
class NormReport:
    beta: float
    sup_norm_sq: float
    h2_norm_sq: float
    lpi_norm_sq: float
    m2_norm_sq: float


def interval_weights(lat: Lattice, beta):
    """Exact ``int_{t_k}^{t_{k+1}} e^{beta s} ds`` for every step."""
    if beta == 0:
        return lat.dt.copy()
    g = lat.grid
    return np.expm1(beta * lat.dt) * np.exp(beta * g[:-1]) / beta


def _expect_by_level(lat, per_node):
    """Sum over levels of E[per_node at that level]."""
    return float(np.sum(lat.node_prob * per_node))


def _as_process(phi):
    if isinstance(phi, OptionalProcess):
        return phi
    return OptionalProcess.right_continuous(phi)


def sup_norm_beta(lat: Lattice, phi, beta=0.0) -> float:
    """Squared norm ``E[max_t e^{beta t} phi_t^2]`` along each path.

    The value side of a node is weighted at its own time; the interval side
    ``vplus`` is weighted at the right end of the interval, which is the
    supremum of ``e^{beta s}`` over the open interval.
    """
    phi = _as_process(phi)
    g = lat.grid
    t_node = g[lat.node_level]
    score = np.exp(beta * t_node) * phi.v**2
    internal = lat.internal
    t_next = g[lat.node_level[internal] + 1]
    score[internal] = np.maximum(score[internal], np.exp(beta * t_next) * phi.vplus[internal] ** 2)
    run = score.copy()
    for k in range(1, lat.N + 1):
        sl = lat.level(k)
        run[sl] = np.maximum(run[sl], run[lat.parent[sl]])
    leaves = lat.leaves
    return float(lat.node_prob[leaves] @ run[leaves])


def h2_norm_beta(lat: Lattice, phi, beta=0.0) -> float:
    """Squared norm ``E[int_0^T e^{beta s} phi_s^2 ds]``.

    An :class:`OptionalProcess` contributes its interval values ``vplus``; a
    plain array over nodes is read as the value held on each node's interval.
    """
    vals = phi.vplus if isinstance(phi, OptionalProcess) else np.asarray(phi, dtype=float)
    w = interval_weights(lat, beta)
    internal = lat.internal
    per_node = np.zeros(lat.n_nodes)
    per_node[internal] = vals[internal] ** 2 * w[lat.node_level[internal]]
    return _expect_by_level(lat, per_node)


def lpi_norm_beta(lat: Lattice, psi, beta=0.0) -> float:
    """Squared norm ``E[sum_k e^{beta t_k} sum_u psi_k(u)^2 mu(u) dt_k]``."""
    psi = np.asarray(psi, dtype=float).reshape(lat.n_nodes, len(lat.marks))
    mu = lat.marks.intensities
    internal = lat.internal
    lev = lat.node_level[internal]
    per_node = np.zeros(lat.n_nodes)
    per_node[internal] = (np.exp(beta * lat.grid[lev]) * lat.dt[lev]
                          * (psi[internal] ** 2 @ mu))
    return _expect_by_level(lat, per_node)


def m2_norm_beta(lat: Lattice, m_incr, beta=0.0) -> float:
    """Squared norm ``E[sum_k e^{beta t_{k+1}} (Delta M_{k+1})^2]``.

    ``m_incr[c]`` is the increment on the branch leading into node ``c``.
    """
    m_incr = np.asarray(m_incr, dtype=float)
    per_node = np.exp(beta * lat.grid[lat.node_level]) * m_incr**2
    per_node[0] = 0.0
    return _expect_by_level(lat, per_node)


def norm_report(lat, Y, Z, psi, m_incr, beta=0.0) -> NormReport:
    return NormReport(
        beta=float(beta),
        sup_norm_sq=sup_norm_beta(lat, Y, beta),
        h2_norm_sq=h2_norm_beta(lat, Z, beta),
        lpi_norm_sq=lpi_norm_beta(lat, psi, beta),
        m2_norm_sq=m2_norm_beta(lat, m_incr, beta),
    )
