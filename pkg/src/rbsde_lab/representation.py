"""One-step martingale representation by orthogonal projection.

A centred increment on the branches of a node is split into
``z * dW + sum_u psi(u) * dpi(u) + dM`` where ``(z, psi)`` solve the normal
equations under the node's branch probabilities and ``dM`` is the residual,
orthogonal to ``1``, ``dW`` and every compensated jump increment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotCentered, SingularGram
from .lattice import Lattice

CENTER_TOL = 1e-10


@dataclass(frozen=True)
class NodeRepresentation:
    z: float
    psi: np.ndarray  # one entry per mark; zero for marks without intensity
    residual: np.ndarray  # one entry per branch

    def psi_map(self, lat: Lattice):
        return dict(zip(lat.marks.names, self.psi.tolist()))


def _active_marks(lat):
    return np.flatnonzero(lat.marks.intensities > 0)


def regressors(lat: Lattice, k):
    """Design matrix (branches x regressors) of step ``k`` and regressor names."""
    active = _active_marks(lat)
    X = np.column_stack([lat.dw[k]] + [lat.dpi[k][:, u] for u in active])
    names = ["dW"] + [f"dpi[{lat.marks.names[u]}]" for u in active]
    return X, names


def _projector(lat, k):
    cache = lat.__dict__.setdefault("_projectors", {})
    if k not in cache:
        cache[k] = _build_projector(lat, k)
    return cache[k]


def _build_projector(lat, k):
    X, names = regressors(lat, k)
    p = lat.probs[k]
    gram = X.T @ (p[:, None] * X)
    eig = np.linalg.eigvalsh(gram)
    if eig.min() <= 1e-12 * max(eig.max(), 1.0):
        _, _, vt = np.linalg.svd(gram)
        null = vt[-1]
        involved = [n for n, c in zip(names, null) if abs(c) > 1e-8]
        raise SingularGram(f"regressors {involved} are linearly dependent at step {k}", involved)
    # coefficients = solve(gram, X^T diag(p) inc) for every increment at once
    return np.linalg.solve(gram, (p[:, None] * X).T), X


def represent_level(lat: Lattice, k, increments):
    """Represent the increments of every node at level ``k``.

    ``increments`` has shape (n_nodes_at_level, B). Returns ``(z, psi,
    residual)`` with shapes (n,), (n, n_marks) and (n, B).
    """
    inc = np.asarray(increments, dtype=float).reshape(-1, lat.n_branches)
    mean = inc @ lat.probs[k]
    scale = 1.0 + np.abs(inc).max(axis=1)
    bad = np.flatnonzero(np.abs(mean) > CENTER_TOL * scale)
    if bad.size:
        raise NotCentered(f"increments at level {k} have nonzero mean, e.g. {mean[bad[0]]!r}")
    solver, X = _projector(lat, k)
    coef = inc @ solver.T
    residual = inc - coef @ X.T
    psi = np.zeros((inc.shape[0], len(lat.marks)))
    psi[:, _active_marks(lat)] = coef[:, 1:]
    return coef[:, 0], psi, residual


def represent(lat: Lattice, node, increment) -> NodeRepresentation:
    """Project one node's centred increment onto ``dW`` and the ``dpi(u)``."""
    k = lat.time_index(node)
    if k == lat.N:
        raise ValueError(f"node {node} is a leaf")
    if isinstance(increment, dict):
        increment = [increment[b] for b in range(lat.n_branches)]
    z, psi, residual = represent_level(lat, k, np.asarray(increment, dtype=float)[None, :])
    return NodeRepresentation(float(z[0]), psi[0], residual[0])


def recombine(lat: Lattice, z, psi, m_incr):
    """Martingale increment ``z dW + sum psi dpi + dM`` on the branch into each node.

    ``z`` and ``psi`` live on parents, ``m_incr`` on children. The root entry is 0.
    """
    out = np.zeros(lat.n_nodes)
    nonroot = lat.parent >= 0
    par = lat.parent[nonroot]
    out[nonroot] = (z[par] * lat.dw_in[nonroot]
                    + np.einsum("ij,ij->i", psi[par], lat.dpi_in[nonroot])
                    + m_incr[nonroot])
    return out


def orthogonality_residual(lat: Lattice, m_incr):
    """Largest |E[dM]|, |E[dM dW]|, |E[dM dpi(u)]| over internal nodes."""
    worst = 0.0
    m_incr = np.asarray(m_incr, dtype=float)
    for k in range(lat.N):
        dm = m_incr[lat.level(k + 1)].reshape(-1, lat.n_branches)
        p = lat.probs[k]
        cols = [np.ones(lat.n_branches), lat.dw[k]] + [lat.dpi[k][:, u] for u in range(len(lat.marks))]
        for c in cols:
            worst = max(worst, float(np.abs(dm @ (p * c)).max()))
    return worst
