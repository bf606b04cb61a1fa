import dataclasses

import numpy as np
import pytest

from rbsde_lab import (Mark, StoppingTime, binary_lattice, check_solution, make_obstacle, oracle_value,
                       random_obstacle, solve_frozen)
from rbsde_lab.errors import TooManyPolicies
from rbsde_lab.penalization import solve_penalized
from rbsde_lab.process import constant_obstacle, step_obstacle
from rbsde_lab.snell import STOP_AFTER, STOP_AT, policy_count

import oracles
from conftest import instances


def right_jump_instance():
    lat = binary_lattice(1)
    return lat, step_obstacle(lat, c=1.0, levels={0: 2.0}, jumps={0: 2.0})


def test_constant_obstacle_is_constant_solution():
    lat = binary_lattice(3, 1.0, [Mark("u", 0.2, 0.3)])
    sol = solve_frozen(lat, 0.0, constant_obstacle(lat, 1.7))
    np.testing.assert_allclose(sol.Y.v, 1.7, atol=1e-15)
    for arr in (sol.Z, sol.psi, sol.M_incr, sol.A_incr, sol.C_jump):
        np.testing.assert_allclose(arr, 0.0, atol=1e-15)


def test_right_jump_example():
    lat, xi = right_jump_instance()
    assert (xi.v[0], xi.vplus[0]) == (2.0, 0.0)
    sol = solve_frozen(lat, 0.0, xi)
    assert sol.Y.v[0] == oracles.RJ_Y_V
    assert sol.Y.vplus[0] == oracles.RJ_Y_VPLUS
    assert sol.C_jump[0] == oracles.RJ_C
    assert sol.A_incr[0] == oracles.RJ_A
    assert oracle_value(lat, 0.0, xi) == oracles.RJ_ORACLE
    sol1 = solve_frozen(lat, 1.0, xi)
    assert sol1.Y.vplus[0] == oracles.RJ_F1_Y_VPLUS and sol1.C_jump[0] == oracles.RJ_F1_C


def test_oracle_small_examples():
    lat = binary_lattice(1)
    assert oracle_value(lat, 0.0, constant_obstacle(lat, 0.3)) == pytest.approx(0.3)
    xi = make_obstacle(lat, (np.array([1.0, 3, -1]), np.array([1.0, 3, -1])), [3.0, -1.0])
    assert oracle_value(lat, 0.0, xi) == pytest.approx(1.0)


def test_oracle_matches_snell_everywhere():
    for lat, f, xi in instances(24, seed=5):
        sol = solve_frozen(lat, f, xi)
        for S in range(lat.n_nodes):
            if policy_count(lat, S) <= 100_000:
                assert abs(oracle_value(lat, f, xi, S) - sol.Y.v[S]) <= 1e-12


def test_oracle_guard():
    lat = binary_lattice(3, 1.0, [Mark("u", 0.0, 0.2)])
    assert policy_count(lat, 0) == 2 + (2 + 3**4) ** 4
    with pytest.raises(TooManyPolicies):
        oracle_value(lat, 0.0, constant_obstacle(lat), 0)


def test_streamed_root_enumeration():
    lat = binary_lattice(3, 1.0, [Mark("u", -0.3, 0.2)])
    rng = np.random.default_rng(12)
    xi = random_obstacle(lat, rng)
    f = rng.uniform(-1, 1, lat.n_nodes)
    assert abs(oracle_value(lat, f, xi, 0, max_policies=10**8) - solve_frozen(lat, f, xi).Y.v[0]) <= 1e-12


def test_policy_count_binary():
    lat = binary_lattice(2)
    assert policy_count(lat, lat.leaves[0]) == 1
    assert policy_count(lat, 1) == 3
    assert policy_count(lat, 0) == 11


def test_solution_conditions_hold():
    for lat, f, xi in instances(24, seed=6):
        assert check_solution(lat, f, xi, solve_frozen(lat, f, xi)).ok(1e-12)


def test_corrupted_solution_is_flagged():
    lat = binary_lattice(2)
    xi = random_obstacle(lat, np.random.default_rng(2))
    sol = solve_frozen(lat, 0.0, xi)
    A = sol.A_incr.copy()
    A[0] += 0.25
    rep = check_solution(lat, 0.0, xi, dataclasses.replace(sol, A_incr=A))
    assert rep.a_residual > 0 or rep.dynamics_residual > 0
    assert not rep.ok()


def test_penalized_solution_nearly_satisfies_conditions():
    lat = binary_lattice(2)
    xi = random_obstacle(lat, np.random.default_rng(3), scale=0.5)
    pen = solve_penalized(lat, 0.0, xi, 1e6)
    assert check_solution(lat, 0.0, xi, pen.solution).worst <= 1e-5


def test_monotone_in_data():
    rng = np.random.default_rng(9)
    for lat, f, xi in instances(12, seed=9):
        s = solve_frozen(lat, f, xi)
        up = solve_frozen(lat, f, xi.shift(rng.uniform(0, 0.5)))
        more = solve_frozen(lat, f + rng.uniform(0, 1, lat.n_nodes), xi)
        for other in (up, more):
            assert np.all(other.Y.v >= s.Y.v - 1e-14)
            assert np.all(other.Y.vplus >= s.Y.vplus - 1e-14)


def test_stopping_time_helpers():
    lat = binary_lattice(2)
    tau = StoppingTime.at_terminal(lat)
    assert [n for n, _ in tau.stopping_nodes(lat)] == list(lat.leaves)
    now = StoppingTime.immediately(lat, STOP_AFTER)
    assert now.stopping_nodes(lat, 1) == [(1, STOP_AFTER)]
    assert StoppingTime.immediately(lat).stopping_nodes(lat) == [(0, STOP_AT)]
