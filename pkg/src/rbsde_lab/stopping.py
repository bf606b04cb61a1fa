"""Optimal stopping and dynamic risk measures built on the reflected solution."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import picard
from .drivers import Driver, frozen_driver
from .errors import InvalidStoppingTime, LuscViolated, StepTooCoarse, TooManyPolicies
from .lattice import Lattice
from .process import Obstacle
from .representation import represent_level
from .snell import (CONTINUE, STOP_AFTER, STOP_AT, RbsdeSolution, StoppingTime,
                    policy_count, solve_frozen)

FIXED_POINT_TOL = 1e-13
SLACK = 1e-12


def _subtree_levels(lat, S):
    k0 = lat.time_index(S)
    return [(k, lat.descendants_at(S, k)) for k in range(k0, lat.N + 1)]


def f_expectation(lat: Lattice, driver: Driver, xi: Obstacle, S, tau: StoppingTime,
                  max_iter=500) -> float:
    """Value at ``S`` of the non-reflected equation stopped at ``tau``.

    Stopping at ``t`` pays ``xi.v``; stopping just after ``t`` pays
    ``xi.vplus``. Continuation nodes solve ``y = E[next] + f(t, y, z, psi) dt``
    by fixed-point iteration, which needs ``K dt < 1/2``.
    """
    S = int(S)
    k0 = lat.time_index(S)
    if not isinstance(tau, StoppingTime) or tau.decisions.shape != (lat.n_nodes,):
        raise InvalidStoppingTime("tau must be a StoppingTime over every node of the lattice")
    if not driver.frozen and lat.N > k0 and driver.lipschitz_K * lat.dt[k0:].max() >= 0.5:
        raise StepTooCoarse(f"K dt = {driver.lipschitz_K * lat.dt[k0:].max():.3g} is not < 1/2")
    y = np.zeros(lat.n_nodes)
    for k, nodes in reversed(_subtree_levels(lat, S)):
        d = tau.decisions[nodes]
        if k == lat.N:
            y[nodes] = xi.v[nodes]
            continue
        vals = np.where(d == STOP_AFTER, xi.vplus[nodes], xi.v[nodes])
        child = y[lat.descendants_at(S, k + 1)].reshape(-1, lat.n_branches)
        cond = child @ lat.probs[k]
        z, psi, _ = represent_level(lat, k, child - cond[:, None])
        t, h = lat.grid[k], lat.dt[k]
        cont = cond + driver.eval(t, cond, z, psi, nodes) * h
        if not driver.frozen:
            for _ in range(max_iter):
                nxt = cond + driver.eval(t, cont, z, psi, nodes) * h
                done = np.max(np.abs(nxt - cont) / (1.0 + np.abs(nxt))) <= FIXED_POINT_TOL
                cont = nxt
                if done:
                    break
        y[nodes] = np.where(d == CONTINUE, cont, vals)
    return float(y[S])


def enumerate_stopping_times(lat: Lattice, S=0, max_policies=100_000):
    """Yield every two-sided stopping time on the subtree of ``S``.

    Decisions outside the subtree are left as ``CONTINUE``.
    """
    count = policy_count(lat, S)
    if count > max_policies:
        raise TooManyPolicies(count, max_policies)

    def policies(node):
        if lat.is_leaf(node):
            yield {node: STOP_AT}
            return
        yield {node: STOP_AT}
        yield {node: STOP_AFTER}
        kids = [list(policies(int(c))) for c in lat.children(node)]
        for combo in itertools.product(*kids):
            out = {node: CONTINUE}
            for part in combo:
                out.update(part)
            yield out

    for pol in policies(int(S)):
        d = np.zeros(lat.n_nodes, dtype=np.int8)
        for n, dec in pol.items():
            d[n] = dec
        yield StoppingTime.from_decisions(lat, d)


def epsilon_optimal_time(lat: Lattice, sol: RbsdeSolution, xi: Obstacle, S, epsilon) -> StoppingTime:
    """First node and side from ``S`` on where ``Y <= xi + epsilon``; the value side is checked first."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    d = np.full(lat.n_nodes, CONTINUE, dtype=np.int8)
    d[sol.Y.vplus <= xi.vplus + epsilon] = STOP_AFTER
    d[sol.Y.v <= xi.v + epsilon] = STOP_AT
    return StoppingTime.from_decisions(lat, d)


def _solve(lat, driver, xi, beta=1.0, tol=1e-16, max_iter=500):
    if driver.frozen:
        nodes = np.arange(lat.n_nodes)
        zeros = np.zeros(lat.n_nodes)
        f = driver.at_nodes(lat, nodes, zeros, zeros, np.zeros((lat.n_nodes, len(lat.marks))))
        return solve_frozen(lat, np.array(f), xi)
    return picard.solve(lat, driver, xi, beta=beta, tol=tol, max_iter=max_iter)[0]


@dataclass(frozen=True)
class StoppingReport:
    S: int
    epsilon: float
    Y_S: float
    value: float
    gap: float
    empirical_C: float
    stops: int  # number of stopping points on the subtree
    holds: bool


def check_epsilon_optimality(lat: Lattice, driver: Driver, xi: Obstacle, S, epsilon,
                             sol: RbsdeSolution | None = None) -> StoppingReport:
    """Gap between ``Y_S`` and the value of stopping at the epsilon-optimal time.

    For drivers that ignore ``(y, z, psi)`` the gap must be at most ``epsilon``;
    otherwise the ratio ``gap / epsilon`` is only reported.
    """
    sol = sol if sol is not None else _solve(lat, driver, xi)
    tau = epsilon_optimal_time(lat, sol, xi, S, epsilon)
    value = f_expectation(lat, driver, xi, S, tau)
    y_s = float(sol.Y.v[S])
    gap = y_s - value
    holds = gap <= epsilon + SLACK if driver.frozen else True
    return StoppingReport(int(S), float(epsilon), y_s, value, gap, gap / epsilon,
                          len(tau.stopping_nodes(lat, S)), holds)


def optimal_time_lusc(lat: Lattice, sol: RbsdeSolution, xi: Obstacle, S, driver: Driver | None = None,
                      tol=1e-12):
    """First time from ``S`` at which ``Y`` touches ``xi``, on either side.

    Optimality is claimed only when no node below ``S`` sits under the left
    limit inherited from its parent; otherwise :class:`LuscViolated` is raised.
    """
    S = int(S)
    below = np.concatenate([lat.descendants_at(S, k) for k in range(lat.time_index(S) + 1, lat.N + 1)]
                           or [np.empty(0, dtype=int)])
    bad = np.intersect1d(xi.lusc_violations(lat), below)
    if bad.size:
        raise LuscViolated(f"{bad.size} nodes below {S} violate the left-upper-semicontinuity surrogate",
                           bad.tolist())
    d = np.full(lat.n_nodes, CONTINUE, dtype=np.int8)
    d[np.abs(sol.Y.vplus - xi.vplus) <= tol] = STOP_AFTER
    d[np.abs(sol.Y.v - xi.v) <= tol] = STOP_AT
    tau = StoppingTime.from_decisions(lat, d)
    driver = driver if driver is not None else frozen_driver(sol.f)
    value = f_expectation(lat, driver, xi, S, tau)
    y_s = float(sol.Y.v[S])
    report = StoppingReport(S, 0.0, y_s, value, y_s - value, float("nan"),
                            len(tau.stopping_nodes(lat, S)), abs(y_s - value) <= 1e-9)
    return tau, report


@dataclass(frozen=True)
class RiskReport:
    v: np.ndarray
    v_plus: np.ndarray
    v_other: np.ndarray | None = None
    ordered: bool | None = None  # xi <= xi_other on both sides
    violations: int = 0
    max_violation: float = 0.0


def risk_measure(lat: Lattice, driver: Driver, xi: Obstacle, other: Obstacle | None = None,
                 **solve_kw) -> RiskReport:
    """Dynamic risk ``v = -Y`` nodewise; with ``other`` also checks antimonotonicity."""
    sol = _solve(lat, driver, xi, **solve_kw)
    v = -sol.Y.v
    if other is None:
        return RiskReport(v, -sol.Y.vplus)
    v2 = -_solve(lat, driver, other, **solve_kw).Y.v
    ordered = bool(np.all(xi.v <= other.v) and np.all(xi.vplus <= other.vplus))
    excess = v2 - v  # should be <= 0 when ordered
    bad = excess > SLACK
    return RiskReport(v, -sol.Y.vplus, v2, ordered, int(bad.sum()) if ordered else 0,
                      float(max(excess.max(), 0.0)))
