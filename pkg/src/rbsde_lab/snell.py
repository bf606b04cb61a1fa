"""Frozen-driver reflected BSDE: backward Snell induction with the Mertens split.

On each node the reflection splits in two. ``A_incr`` pushes the interval
value ``Y.vplus`` up to ``xi.vplus``; this is the predictable part. ``C_jump``
pushes the node value ``Y.v`` up to ``xi.v`` and appears as the right jump
``Y.v - Y.vplus``. On a grid the continuous part of ``A`` vanishes, so its
minimality condition holds trivially.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidStoppingTime, TooManyPolicies
from .lattice import Lattice
from .process import Obstacle, OptionalProcess
from .representation import orthogonality_residual, recombine, represent_level

CONTINUE, STOP_AT, STOP_AFTER = 0, 1, 2


@dataclass(frozen=True)
class RbsdeSolution:
    Y: OptionalProcess
    Z: np.ndarray        # per node, integrand on (t_k, t_{k+1}]
    psi: np.ndarray      # (n_nodes, n_marks)
    M_incr: np.ndarray   # per node: orthogonal increment on the branch into it
    A_incr: np.ndarray   # per node: increment of A over (t_k, t_{k+1}]
    C_jump: np.ndarray   # per node: Y.v - Y.vplus
    f: np.ndarray        # driver value used on each node's interval

    def martingale_increments(self, lat: Lattice):
        return recombine(lat, self.Z, self.psi, self.M_incr)


@dataclass(frozen=True)
class SkorokhodReport:
    """Residuals of the solution conditions; every entry should be ~0.

    ``a_residual`` and ``c_residual`` are the minimality products
    ``(Y.vplus - xi.vplus) * A_incr`` and ``(Y.v - xi.v) * C_jump``;
    ``floor_violation`` is the largest ``xi - Y`` on either side.
    """

    a_residual: float
    c_residual: float
    floor_violation: float
    dynamics_residual: float
    jump_residual: float
    orthogonality_residual: float
    negativity: float

    @property
    def worst(self):
        return max(getattr(self, f.name) for f in fields(self))

    def ok(self, tol=1e-12):
        return self.worst <= tol


def _as_node_values(lat, f):
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        return np.full(lat.n_nodes, float(f))
    if f.shape != (lat.n_nodes,):
        raise ValueError(f"driver values must be scalar or have shape ({lat.n_nodes},)")
    return f


def solve_frozen(lat: Lattice, f, xi: Obstacle) -> RbsdeSolution:
    """Solve the reflected equation for a driver given as a value per node."""
    f = _as_node_values(lat, f)
    n, B = lat.n_nodes, lat.n_branches
    v = np.empty(n)
    vplus = np.empty(n)
    Z = np.zeros(n)
    psi = np.zeros((n, len(lat.marks)))
    M = np.zeros(n)
    A = np.zeros(n)
    C = np.zeros(n)

    leaves = lat.level(lat.N)
    v[leaves] = xi.v[leaves]
    vplus[leaves] = xi.v[leaves]
    for k in range(lat.N - 1, -1, -1):
        sl, ch = lat.level(k), lat.level(k + 1)
        child = v[ch].reshape(-1, B)
        cond = child @ lat.probs[k]
        E = cond + f[sl] * lat.dt[k]
        A[sl] = np.maximum(xi.vplus[sl] - E, 0.0)
        vplus[sl] = np.maximum(xi.vplus[sl], E)
        C[sl] = np.maximum(xi.v[sl] - vplus[sl], 0.0)
        v[sl] = np.maximum(xi.v[sl], vplus[sl])
        z, ps, res = represent_level(lat, k, child - cond[:, None])
        Z[sl], psi[sl], M[ch] = z, ps, res.ravel()
    return RbsdeSolution(OptionalProcess(v, vplus), Z, psi, M, A, C, f)


def check_solution(lat: Lattice, f, xi: Obstacle, sol: RbsdeSolution) -> SkorokhodReport:
    """Recompute every solution condition from scratch and report maxima."""
    f = _as_node_values(lat, f)
    Y = sol.Y
    internal = lat.internal
    nonroot = np.flatnonzero(lat.parent >= 0)
    par = lat.parent[nonroot]
    dN = recombine(lat, sol.Z, sol.psi, sol.M_incr)
    pred = (Y.vplus[par] - f[par] * lat.dt[lat.node_level[par]] - sol.A_incr[par] + dN[nonroot])
    dyn = np.abs(Y.v[nonroot] - pred)
    leaves = lat.leaves
    term = np.abs(Y.v[leaves] - xi.v[leaves])
    return SkorokhodReport(
        a_residual=float(np.abs((Y.vplus[internal] - xi.vplus[internal]) * sol.A_incr[internal]).max(initial=0.0)),
        c_residual=float(np.abs((Y.v - xi.v) * sol.C_jump).max(initial=0.0)),
        floor_violation=float(max(np.max(xi.v - Y.v), np.max(xi.vplus[internal] - Y.vplus[internal],
                                                               initial=0.0), 0.0)),
        dynamics_residual=float(max(dyn.max(initial=0.0), term.max())),
        jump_residual=float(np.abs(Y.v - Y.vplus - sol.C_jump).max()),
        orthogonality_residual=orthogonality_residual(lat, sol.M_incr),
        negativity=float(max(-sol.A_incr.min(), -sol.C_jump.min(), 0.0)),
    )


# -- stopping times and the enumeration oracle ------------------------------

@dataclass(frozen=True)
class StoppingTime:
    """Per-node decision: continue, or stop (at t or just after t).

    Only the first stopping decision along each path matters; leaves always
    stop at ``T``.
    """

    decisions: np.ndarray

    def __post_init__(self):
        d = np.array(self.decisions, dtype=np.int8)
        if d.ndim != 1 or not np.isin(d, (CONTINUE, STOP_AT, STOP_AFTER)).all():
            raise InvalidStoppingTime("decisions must be a 1-d array of 0, 1, 2")
        d.setflags(write=False)
        object.__setattr__(self, "decisions", d)

    @classmethod
    def from_decisions(cls, lat: Lattice, decisions):
        d = np.array(decisions, dtype=np.int8)
        if d.shape != (lat.n_nodes,):
            raise InvalidStoppingTime(f"expected {lat.n_nodes} decisions, got {d.shape}")
        d[lat.leaves] = STOP_AT
        return cls(d)

    @classmethod
    def at_terminal(cls, lat: Lattice):
        return cls.from_decisions(lat, np.zeros(lat.n_nodes))

    @classmethod
    def immediately(cls, lat: Lattice, side=STOP_AT):
        return cls.from_decisions(lat, np.full(lat.n_nodes, side))

    def stopping_nodes(self, lat: Lattice, start=0):
        """``(node, decision)`` of every stopping point below ``start``."""
        out = []
        stack = [int(start)]
        while stack:
            n = stack.pop()
            d = int(self.decisions[n])
            if d != CONTINUE or lat.is_leaf(n):
                out.append((n, d if d != CONTINUE else STOP_AT))
            else:
                stack.extend(int(c) for c in lat.children(n)[::-1])
        return sorted(out)


def policy_count(lat: Lattice, node) -> int:
    """Number of distinct two-sided stopping times on the subtree of ``node``."""
    count = 1
    for _ in range(lat.time_index(node), lat.N):
        count = 2 + count ** lat.n_branches
    return count


def oracle_value(lat: Lattice, f, xi: Obstacle, start=0, max_policies=100_000) -> float:
    """Best expected stopped payoff over every two-sided stopping time from ``start``.

    Each policy's value ``E[xi at the stopping side + sum f dt before it]``
    is computed separately. At ``start`` the continuation policies are
    evaluated in chunks, one policy of the first child at a time, so memory
    stays at the product of the other children's policy counts.
    """
    f = _as_node_values(lat, f)
    start = int(start)
    count = policy_count(lat, start)
    if count > max_policies:
        raise TooManyPolicies(count, max_policies)
    best = max(xi.v[start], xi.vplus[start])
    if lat.is_leaf(start):
        return float(xi.v[start])
    k = lat.time_index(start)
    p = lat.probs[k]
    kids = [p[b] * _policy_values(lat, f, xi, int(c)) for b, c in enumerate(lat.children(start))]
    rest = np.zeros(1)
    for vals in kids[1:]:
        rest = np.add.outer(rest, vals).ravel()
    seen = 2
    for first in kids[0]:
        cont = first + rest + f[start] * lat.dt[k]
        best = max(best, cont.max())
        seen += cont.size
    assert seen == count
    return float(best)


def _policy_values(lat, f, xi, node):
    if lat.is_leaf(node):
        return np.array([xi.v[node]])
    k = lat.time_index(node)
    p = lat.probs[k]
    # expected continuation value of every combination of child policies
    cont = np.zeros(1)
    for b, c in enumerate(lat.children(node)):
        cont = np.add.outer(cont, p[b] * _policy_values(lat, f, xi, int(c))).ravel()
    return np.concatenate([[xi.v[node], xi.vplus[node]], cont + f[node] * lat.dt[k]])
