"""Pathwise check of the change-of-variables formula for ``e^{beta t} Y_t^2``.

A discrete làdlàg semimartingale is ``Y = Y0 + N + A + B``. ``N`` jumps only at
grid times. ``A`` moves over ``(t_k, t_{k+1}]`` and is seen at ``t_{k+1}``.
``B`` carries the right jumps ``Y.vplus - Y.v``. Every martingale here is purely
discontinuous, so the continuous bracket term is zero. The Brownian proxy's
quadratic variation shows up in the left-jump squares instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormulaViolated, ReconstructionFailed
from .lattice import Lattice
from .process import OptionalProcess
from .snell import RbsdeSolution


@dataclass(frozen=True)
class LadlagDecomposition:
    Y0: float
    N_incr: np.ndarray  # per node: martingale increment on the branch into it
    A_incr: np.ndarray  # per node: finite-variation increment over its interval
    B_jump: np.ndarray  # per node: right jump at the node

    def reconstruct(self, lat: Lattice) -> OptionalProcess:
        v = np.empty(lat.n_nodes)
        vplus = np.empty(lat.n_nodes)
        v[0] = self.Y0
        for k in range(lat.N + 1):
            sl = lat.level(k)
            if k > 0:
                par = lat.parent[sl]
                v[sl] = vplus[par] + self.A_incr[par] + self.N_incr[sl]
            vplus[sl] = v[sl] + (self.B_jump[sl] if k < lat.N else 0.0)
        return OptionalProcess(v, vplus)

    def martingale_residual(self, lat: Lattice):
        """Largest |E[N_incr | node]| over internal nodes."""
        worst = 0.0
        for k in range(lat.N):
            worst = max(worst, float(np.abs(lat.cond_expect_level(k, self.N_incr[lat.level(k + 1)])).max()))
        return worst


def from_solution(lat: Lattice, sol: RbsdeSolution, f=None, tol=1e-12) -> LadlagDecomposition:
    """Decompose a reflected solution: ``A = -f dt - A_incr`` and ``B = -C_jump``."""
    f = sol.f if f is None else np.broadcast_to(np.asarray(f, dtype=float), (lat.n_nodes,))
    dt = np.zeros(lat.n_nodes)
    internal = lat.internal
    dt[internal] = lat.dt[lat.node_level[internal]]
    dec = LadlagDecomposition(
        Y0=float(sol.Y.v[0]),
        N_incr=sol.martingale_increments(lat),
        A_incr=-f * dt - sol.A_incr,
        B_jump=-np.asarray(sol.C_jump, dtype=float),
    )
    rec = dec.reconstruct(lat)
    residual = float(max(np.abs(rec.v - sol.Y.v).max(), np.abs(rec.vplus - sol.Y.vplus).max()))
    if residual > tol:
        raise ReconstructionFailed(f"decomposition does not reproduce Y (residual {residual:.3e})", residual)
    return dec


def random_decomposition(lat: Lattice, rng, scale=1.0) -> LadlagDecomposition:
    n = lat.n_nodes
    N_incr = np.zeros(n)
    for k in range(lat.N):
        raw = scale * rng.standard_normal(lat.level(k + 1).stop - lat.level(k + 1).start)
        mean = lat.cond_expect_level(k, raw)
        N_incr[lat.level(k + 1)] = raw - np.repeat(mean, lat.n_branches)
    B = scale * rng.standard_normal(n)
    B[lat.leaves] = 0.0
    return LadlagDecomposition(float(scale * rng.standard_normal()), N_incr,
                               scale * rng.standard_normal(n), B)


@dataclass(frozen=True)
class FormulaReport:
    beta: float
    t_indices: tuple
    max_discrepancy: float  # |LHS - RHS| / (1 + |LHS|), worst over paths and times
    worst_path: int
    worst_t_index: int
    lhs: np.ndarray  # (n_paths, len(t_indices))
    rhs: np.ndarray


def formula_terms(lat: Lattice, Y: OptionalProcess, dec: LadlagDecomposition, beta):
    """Per path and step, the six increments of the right-hand side.

    Returns an array (n_paths, N, 6) with columns: ds-integral, d(A+N)
    integral, left-jump square, dB integral, right-jump square, continuous
    bracket (identically zero).
    """
    paths = lat.leaf_paths()
    g = lat.grid
    here, nxt = paths[:, :-1], paths[:, 1:]
    e0 = np.exp(beta * g[:-1])[None, :]
    e1 = np.exp(beta * g[1:])[None, :]
    vp, v, v1 = Y.vplus[here], Y.v[here], Y.v[nxt]
    terms = np.zeros(paths[:, :-1].shape + (6,))
    terms[..., 0] = vp**2 * (e1 - e0)
    terms[..., 1] = 2 * e1 * vp * (dec.A_incr[here] + dec.N_incr[nxt])
    terms[..., 2] = e1 * (v1 - vp) ** 2
    terms[..., 3] = 2 * e0 * v * dec.B_jump[here]
    terms[..., 4] = e0 * (vp - v) ** 2
    return terms


def verify_formula(lat: Lattice, dec: LadlagDecomposition, beta=0.0, t_index=None, tol=1e-10) -> FormulaReport:
    """Check the identity on every root-to-leaf path.

    ``t_index`` selects one grid time; by default every time is checked.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    Y = dec.reconstruct(lat)
    paths = lat.leaf_paths()
    ts = tuple(range(lat.N + 1)) if t_index is None else (int(t_index),)
    steps = formula_terms(lat, Y, dec, beta).sum(axis=2)
    cum = np.concatenate([np.zeros((len(paths), 1)), np.cumsum(steps, axis=1)], axis=1)
    rhs = dec.Y0**2 + cum[:, ts]
    lhs = np.exp(beta * lat.grid[list(ts)])[None, :] * Y.v[paths[:, ts]] ** 2
    disc = np.abs(lhs - rhs) / (1.0 + np.abs(lhs))
    p, t = np.unravel_index(int(np.argmax(disc)), disc.shape)
    report = FormulaReport(float(beta), ts, float(disc[p, t]), int(p), ts[t], lhs, rhs)
    if report.max_discrepancy > tol:
        raise FormulaViolated(f"identity off by {report.max_discrepancy:.3e} on path {p} at t_index {ts[t]}",
                              int(p), report.max_discrepancy)
    return report
