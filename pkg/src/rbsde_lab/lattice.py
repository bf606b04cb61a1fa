"""Finite non-recombining scenario trees carrying Brownian and Poisson noise.

Every internal node has the same branch template: a block per jump outcome
(no jump, or one jump of a given mark) crossed with a centred Brownian block.
Node ids are laid out level by level, so the nodes at time index ``k`` form
the contiguous range ``offsets[k]:offsets[k + 1]`` and the children of the
``j``-th node of a level are ``offsets[k + 1] + j * B + b``.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec, MissingBranchValue, UnknownMark

BUILD_TOL = 1e-12

# Brownian blocks: (relative increments in units of sqrt(dt), probabilities)
_BROWNIAN_BLOCKS = {
    "binary": (np.array([1.0, -1.0]), np.array([0.5, 0.5])),
    "trinomial": (np.array([np.sqrt(3.0), 0.0, -np.sqrt(3.0)]),
                  np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])),
}


@dataclass(frozen=True)
class Mark:
    """A jump mark: a label, its payoff coordinate and its rate per unit time."""

    name: str
    size: float = 0.0
    intensity: float = 0.0


@dataclass(frozen=True)
class MarkSpace:
    marks: tuple[Mark, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "marks", tuple(self.marks))
        names = [m.name for m in self.marks]
        if len(set(names)) != len(names):
            raise InvalidSpec(f"duplicate mark names in {names}")
        for m in self.marks:
            if not np.isfinite(m.intensity) or m.intensity < 0:
                raise InvalidSpec(f"mark {m.name!r} has invalid intensity {m.intensity}")

    def __len__(self):
        return len(self.marks)

    @property
    def names(self):
        return [m.name for m in self.marks]

    @property
    def intensities(self):
        return np.array([m.intensity for m in self.marks], dtype=float)

    @property
    def sizes(self):
        return np.array([m.size for m in self.marks], dtype=float)

    @property
    def total_intensity(self):
        return float(self.intensities.sum())

    def index(self, mark):
        """Position of ``mark`` given as a name, a :class:`Mark` or an int."""
        if isinstance(mark, Mark):
            mark = mark.name
        if isinstance(mark, (int, np.integer)):
            if 0 <= mark < len(self.marks):
                return int(mark)
        else:
            for i, m in enumerate(self.marks):
                if m.name == mark:
                    return i
        raise UnknownMark(mark)


@dataclass(frozen=True)
class LatticeSpec:
    N: int
    T: float = 1.0
    branching: str = "binary"
    marks: MarkSpace = field(default_factory=MarkSpace)
    grid: tuple[float, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.marks, MarkSpace):
            object.__setattr__(self, "marks", MarkSpace(tuple(self.marks)))


class Lattice:
    """Immutable discrete stochastic basis built by :func:`build_lattice`."""

    def __init__(self, grid, marks, branch_jump, probs, dw):
        self.grid = _frozen(np.asarray(grid, dtype=float))
        self.dt = _frozen(np.diff(self.grid))
        self.marks = marks
        self.branch_jump = _frozen(np.asarray(branch_jump, dtype=int))
        self.probs = _frozen(np.asarray(probs, dtype=float))
        self.dw = _frozen(np.asarray(dw, dtype=float))
        self.N = len(self.dt)
        self.T = float(self.grid[-1])
        self.n_branches = B = len(self.branch_jump)

        mu = marks.intensities
        # compensated jump increments indexed by (step, branch, mark): 1{j_b = u} - mu(u) dt
        hit = (self.branch_jump[:, None] == np.arange(len(marks))[None, :]).astype(float)
        self.dpi = _frozen(hit[None, :, :] - mu[None, None, :] * self.dt[:, None, None])

        sizes = [B ** k for k in range(self.N + 1)]
        self.offsets = _frozen(np.concatenate([[0], np.cumsum(sizes)]).astype(int))
        self.n_nodes = int(self.offsets[-1])

        level = np.repeat(np.arange(self.N + 1), sizes)
        local = np.arange(self.n_nodes) - self.offsets[level]
        parent = np.full(self.n_nodes, -1, dtype=int)
        branch = np.full(self.n_nodes, -1, dtype=int)
        nonroot = level > 0
        parent[nonroot] = self.offsets[level[nonroot] - 1] + local[nonroot] // B
        branch[nonroot] = local[nonroot] % B
        self.node_level = _frozen(level)
        self.parent = _frozen(parent)
        self.branch = _frozen(branch)

        # quantities attached to the branch leading *into* each node
        p_in = np.ones(self.n_nodes)
        dw_in = np.zeros(self.n_nodes)
        dpi_in = np.zeros((self.n_nodes, len(marks)))
        k = level[nonroot] - 1
        b = branch[nonroot]
        p_in[nonroot] = self.probs[k, b]
        dw_in[nonroot] = self.dw[k, b]
        dpi_in[nonroot] = self.dpi[k, b]
        self.p_in = _frozen(p_in)
        self.dw_in = _frozen(dw_in)
        self.dpi_in = _frozen(dpi_in)

        node_prob = np.ones(self.n_nodes)
        for lev in range(1, self.N + 1):
            sl = self.level(lev)
            node_prob[sl] = node_prob[parent[sl]] * p_in[sl]
        self.node_prob = _frozen(node_prob)

    def __repr__(self):
        return (f"Lattice(N={self.N}, T={self.T}, branches={self.n_branches}, "
                f"marks={self.marks.names}, nodes={self.n_nodes})")

    # -- topology ---------------------------------------------------------
    @property
    def root(self):
        return 0

    def level(self, k):
        """Slice of node ids at time index ``k``."""
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def nodes_at(self, k):
        return np.arange(self.offsets[k], self.offsets[k + 1])

    @property
    def leaves(self):
        return self.nodes_at(self.N)

    @property
    def internal(self):
        return np.arange(self.offsets[self.N])

    def time_index(self, node):
        return int(self.node_level[node])

    def time(self, node):
        return float(self.grid[self.node_level[node]])

    def is_leaf(self, node):
        return self.node_level[node] == self.N

    def children(self, node):
        k = int(self.node_level[node])
        if k == self.N:
            return np.empty(0, dtype=int)
        j = node - self.offsets[k]
        start = self.offsets[k + 1] + j * self.n_branches
        return np.arange(start, start + self.n_branches)

    def path(self, node):
        """Node ids from the root down to ``node`` inclusive."""
        out = [int(node)]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out[::-1]

    def descendants_at(self, node, k):
        """Contiguous ids of the descendants of ``node`` at time index ``k``."""
        k0 = int(self.node_level[node])
        if k < k0:
            raise ValueError(f"level {k} lies before node {node}")
        j = node - self.offsets[k0]
        width = self.n_branches ** (k - k0)
        start = self.offsets[k] + j * width
        return np.arange(start, start + width)

    def leaf_paths(self):
        """Array of shape (n_leaves, N + 1) holding the node ids of every path."""
        paths = np.empty((len(self.leaves), self.N + 1), dtype=int)
        paths[:, -1] = self.leaves
        for k in range(self.N, 0, -1):
            paths[:, k - 1] = self.parent[paths[:, k]]
        return paths

    # -- stochastic quantities -------------------------------------------
    def cond_expect_level(self, k, child_values):
        """E[X | F_{t_k}] for every node at level ``k`` given values on level k+1."""
        child_values = np.asarray(child_values, dtype=float)
        return child_values.reshape(-1, self.n_branches) @ self.probs[k]

    def brownian(self):
        """Cumulative Brownian proxy W at every node."""
        return self._accumulate(self.dw_in)

    def jump_sum(self):
        """Cumulative sum of mark sizes along each path."""
        sizes = np.append(self.marks.sizes, 0.0)
        jumps = sizes[self.branch_jump]  # index -1 picks the trailing 0
        inc = np.zeros(self.n_nodes)
        nonroot = self.branch >= 0
        inc[nonroot] = jumps[self.branch[nonroot]]
        return self._accumulate(inc)

    def state(self, sigma=1.0):
        """Jump-diffusion log-state ``sigma * W + sum of mark sizes``."""
        return sigma * self.brownian() + self.jump_sum()

    def _accumulate(self, inc):
        out = np.zeros(self.n_nodes)
        for lev in range(1, self.N + 1):
            sl = self.level(lev)
            out[sl] = out[self.parent[sl]] + inc[sl]
        return out


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


def _grid_from_spec(spec):
    if spec.grid is not None:
        grid = np.asarray(spec.grid, dtype=float)
        if grid.ndim != 1 or len(grid) < 2:
            raise InvalidSpec("grid needs at least two points")
        if grid[0] != 0.0:
            raise InvalidSpec("grid must start at 0")
        if spec.N and len(grid) != spec.N + 1:
            raise InvalidSpec(f"grid has {len(grid)} points but N={spec.N}")
        return grid
    if not isinstance(spec.N, (int, np.integer)) or spec.N < 1:
        raise InvalidSpec(f"N must be a positive integer, got {spec.N!r}")
    if not spec.T > 0:
        raise InvalidSpec(f"T must be positive, got {spec.T!r}")
    return np.linspace(0.0, float(spec.T), spec.N + 1)


def build_lattice(spec: LatticeSpec) -> Lattice:
    """Build the tree described by ``spec`` and verify its moment conditions."""
    if spec.branching not in _BROWNIAN_BLOCKS:
        raise InvalidSpec(f"unknown branching {spec.branching!r}; "
                          f"expected one of {sorted(_BROWNIAN_BLOCKS)}")
    grid = _grid_from_spec(spec)
    dt = np.diff(grid)
    if np.any(dt <= 0) or not np.all(np.isfinite(dt)):
        raise InvalidSpec("grid steps must be positive and finite")
    marks = spec.marks
    mu = marks.intensities
    if mu.sum() * dt.max() >= 1.0:
        raise InvalidSpec(f"total intensity {mu.sum()} times max step {dt.max()} is not < 1")

    unit, pw = _BROWNIAN_BLOCKS[spec.branching]
    active = [i for i, m in enumerate(mu) if m > 0]
    blocks = [-1] + active
    branch_jump = np.repeat(blocks, len(unit))
    probs = np.empty((len(dt), len(branch_jump)))
    dw = np.empty_like(probs)
    for k, h in enumerate(dt):
        q = [1.0 - mu.sum() * h] + [mu[i] * h for i in active]
        probs[k] = np.concatenate([qi * pw for qi in q])
        dw[k] = np.tile(unit * np.sqrt(h), len(blocks))

    lat = Lattice(grid, marks, branch_jump, probs, dw)
    check_invariants(lat, BUILD_TOL)
    return lat


def check_invariants(lat: Lattice, tol: float = BUILD_TOL):
    """Raise :class:`InvalidSpec` if any per-step moment condition fails."""
    mu = lat.marks.intensities
    for k, h in enumerate(lat.dt):
        p, w, dpi = lat.probs[k], lat.dw[k], lat.dpi[k]
        checks = {
            "probabilities sum to one": p.sum() - 1.0,
            "brownian mean": p @ w,
            "brownian variance": p @ w**2 - h,
        }
        for u in range(len(mu)):
            mass = p[lat.branch_jump == u].sum()
            checks[f"jump mass of mark {u}"] = mass - mu[u] * h
            checks[f"brownian/jump covariance of mark {u}"] = p @ (w * dpi[:, u])
        bad = {name: r for name, r in checks.items() if abs(r) > tol}
        if bad or np.any(p <= 0):
            raise InvalidSpec(f"step {k} violates lattice invariants: {bad or 'p <= 0'}")


def cond_expect(lat: Lattice, node, values) -> float:
    """Exact E[X | F_t] at ``node`` from the values of X on its child branches."""
    k = lat.time_index(node)
    if k == lat.N:
        raise MissingBranchValue(f"node {node} is a leaf and has no branches")
    B = lat.n_branches
    if isinstance(values, Mapping):
        missing = [b for b in range(B) if b not in values]
        if missing:
            raise MissingBranchValue(f"no value for branches {missing} of node {node}")
        vals = np.array([values[b] for b in range(B)], dtype=float)
    else:
        vals = np.asarray(values, dtype=float)
        if vals.shape != (B,):
            raise MissingBranchValue(f"expected {B} branch values, got shape {vals.shape}")
    if np.any(np.isnan(vals)):
        raise MissingBranchValue(f"NaN branch value at node {node}")
    return float(lat.probs[k] @ vals)


def compensated_jump_increment(lat: Lattice, node, branch, mark) -> float:
    """``1{branch jumps with mark} - mu(mark) * dt`` on a branch of ``node``."""
    u = lat.marks.index(mark)
    k = lat.time_index(node)
    if k == lat.N:
        raise MissingBranchValue(f"node {node} is a leaf and has no branches")
    return float(lat.dpi[k, branch, u])


def binary_lattice(N, T=1.0, marks: Sequence[Mark] = (), branching="binary"):
    """Shorthand for the usual binary (or trinomial) tree with optional marks."""
    return build_lattice(LatticeSpec(N=N, T=T, branching=branching, marks=MarkSpace(tuple(marks))))
