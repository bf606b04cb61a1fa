"""Two-stage penalised approximation of the frozen-driver reflected equation.

Stage one penalises the interval value against ``xi.vplus``; stage two
penalises the node value against ``xi.v``. Both use the coefficient
``n * dt``, and each scalar equation ``y = a + n dt (y - b)^-`` has a closed form.
As ``n`` grows, the stage masses ``K_A`` and ``K_C`` approach ``A_incr`` and ``C_jump``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MonotonicityViolated
from .lattice import Lattice
from .process import Obstacle, OptionalProcess
from .representation import represent_level
from .snell import RbsdeSolution, _as_node_values, solve_frozen

MONOTONE_TOL = 1e-12


@dataclass(frozen=True)
class PenalizedSolution:
    n: float
    Y: OptionalProcess
    K_A: np.ndarray
    K_C: np.ndarray
    solution: RbsdeSolution  # same data viewed as a candidate reflected solution

    def total_K(self, lat: Lattice):
        """Accumulated penalty mass ``K_T`` on each root-to-leaf path."""
        paths = lat.leaf_paths()[:, :-1]
        return (self.K_A[paths] + self.K_C[paths]).sum(axis=1)


def _penalize(a, b, c):
    """Solve ``y = a + c (y - b)^-`` for ``c >= 0``."""
    return np.where(a >= b, a, (a + c * b) / (1.0 + c))


def solve_penalized(lat: Lattice, f, xi: Obstacle, n) -> PenalizedSolution:
    if not n > 0:
        raise ValueError(f"penalty level must be positive, got {n!r}")
    f = _as_node_values(lat, f)
    N, B = lat.n_nodes, lat.n_branches
    v, vplus = np.empty(N), np.empty(N)
    KA, KC = np.zeros(N), np.zeros(N)
    Z, psi, M = np.zeros(N), np.zeros((N, len(lat.marks))), np.zeros(N)
    leaves = lat.level(lat.N)
    v[leaves] = vplus[leaves] = xi.v[leaves]
    for k in range(lat.N - 1, -1, -1):
        sl, ch = lat.level(k), lat.level(k + 1)
        child = v[ch].reshape(-1, B)
        cond = child @ lat.probs[k]
        E = cond + f[sl] * lat.dt[k]
        c = n * lat.dt[k]
        vplus[sl] = _penalize(E, xi.vplus[sl], c)
        KA[sl] = vplus[sl] - E
        v[sl] = _penalize(vplus[sl], xi.v[sl], c)
        KC[sl] = v[sl] - vplus[sl]
        Z[sl], psi[sl], res = represent_level(lat, k, child - cond[:, None])
        M[ch] = res.ravel()
    Y = OptionalProcess(v, vplus)
    return PenalizedSolution(float(n), Y, KA, KC, RbsdeSolution(Y, Z, psi, M, KA, KC, f))


@dataclass(frozen=True)
class ConvergenceRow:
    n: float
    y_gap: float  # max over nodes and both sides of Y - Y^n
    a_gap: float
    c_gap: float


def convergence_table(lat: Lattice, f, xi: Obstacle, n_list, reference=None):
    """Gaps between penalised solutions and the reflected solution for each ``n``.

    Raises :class:`MonotonicityViolated` if ``Y^n`` decreases in ``n``, exceeds
    the limit, or the gap grows.
    """
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    ref = reference if reference is not None else solve_frozen(lat, f, xi)
    rows, prev = [], None
    for n in n_list:
        pen = solve_penalized(lat, f, xi, n)
        gap_v, gap_p = ref.Y.v - pen.Y.v, ref.Y.vplus - pen.Y.vplus
        if min(gap_v.min(), gap_p.min()) < -MONOTONE_TOL:
            raise MonotonicityViolated(f"Y^n exceeds Y at n={n}")
        row = ConvergenceRow(float(n), float(max(gap_v.max(), gap_p.max(), 0.0)),
                             float(np.abs(pen.K_A - ref.A_incr).max()),
                             float(np.abs(pen.K_C - ref.C_jump).max()))
        if prev is not None:
            p_pen, p_row = prev
            if (np.min(pen.Y.v - p_pen.Y.v) < -MONOTONE_TOL
                    or np.min(pen.Y.vplus - p_pen.Y.vplus) < -MONOTONE_TOL):
                raise MonotonicityViolated(f"Y^n decreased between n={p_row.n} and n={n}")
            if row.y_gap > p_row.y_gap + MONOTONE_TOL:
                raise MonotonicityViolated(f"gap grew between n={p_row.n} and n={n}")
        rows.append(row)
        prev = (pen, row)
    return rows
