import numpy as np
import pytest

from rbsde_lab import binary_lattice, convergence_table, make_obstacle, random_obstacle, solve_frozen, solve_penalized
from rbsde_lab.errors import MonotonicityViolated
from rbsde_lab.penalization import _penalize

import oracles
from conftest import instances


def binding_step():
    lat = binary_lattice(1)
    return lat, make_obstacle(lat, (np.array([2.0, 1, 1]), np.array([2.0, 1, 1])), 1.0)


def test_closed_form_scalar_step():
    lat, xi = binding_step()
    assert solve_penalized(lat, 0.0, xi, 1).Y.vplus[0] == pytest.approx(oracles.PEN_Y_N1, abs=1e-15)
    assert abs(solve_penalized(lat, 0.0, xi, 1e3).Y.vplus[0] - 2.0) <= 1e-3
    assert solve_frozen(lat, 0.0, xi).Y.vplus[0] == 2.0


def test_closed_form_gap_sequence():
    lat, xi = binding_step()
    rows = convergence_table(lat, 0.0, xi, sorted(oracles.PEN_GAP_CLOSED))
    for row in rows:
        assert row.y_gap == pytest.approx(oracles.PEN_GAP_CLOSED[int(row.n)], rel=1e-12)


def test_penalize_scalar_identity():
    a, b = np.array([1.0, 3.0]), np.array([2.0, 2.0])
    y = _penalize(a, b, 4.0)
    np.testing.assert_allclose(y, a + 4.0 * np.maximum(b - y, 0.0), atol=1e-15)


def test_non_binding_obstacle_has_zero_gaps():
    lat = binary_lattice(3)
    xi = make_obstacle(lat, lambda n: (-10.0, -10.0), np.linspace(0, 1, 8))
    for row in convergence_table(lat, 0.2, xi, [1, 10, 100]):
        assert row.y_gap == 0.0 and row.a_gap == 0.0 and row.c_gap == 0.0
    pen = solve_penalized(lat, 0.2, xi, 5)
    assert np.all(pen.K_A == 0) and np.all(pen.K_C == 0)


def test_monotone_and_converging():
    n_list = [1, 10, 100, 1e3, 1e4, 1e5, 1e6]
    for lat, f, xi in instances(30, seed=31):
        prev = None
        for n in n_list:
            pen = solve_penalized(lat, f, xi, n)
            if prev is not None:
                assert np.all(pen.Y.v >= prev.Y.v - 1e-12)
                assert np.all(pen.Y.vplus >= prev.Y.vplus - 1e-12)
            prev = pen
        rows = convergence_table(lat, f, xi, n_list)
        assert rows[-1].y_gap <= 1e-5
        assert rows[-1].a_gap <= 1e-5 and rows[-1].c_gap <= 1e-5


def test_gaps_strictly_decrease_on_n4():
    lat = binary_lattice(4)
    xi = random_obstacle(lat, np.random.default_rng(8))
    gaps = [r.y_gap for r in convergence_table(lat, 0.0, xi, [1, 10, 100, 1000])]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_first_order_rate():
    for lat, f, xi in instances(12, seed=32):
        rows = convergence_table(lat, f, xi, [100, 1e3, 1e4])
        scaled = [r.n * r.y_gap for r in rows if r.y_gap > 0]
        if scaled:
            assert max(scaled) <= 10 * min(scaled)


def test_input_validation():
    lat, xi = binding_step()
    with pytest.raises(ValueError):
        convergence_table(lat, 0.0, xi, [10, 1])
    with pytest.raises(ValueError):
        solve_penalized(lat, 0.0, xi, 0)


def test_reference_above_penalized_is_detected():
    lat, xi = binding_step()
    low = solve_frozen(lat, -5.0, make_obstacle(lat, lambda n: (-9.0, -9.0), -9.0))
    with pytest.raises(MonotonicityViolated):
        convergence_table(lat, 0.0, xi, [1, 10], reference=low)


def test_total_K_per_path():
    lat, xi = binding_step()
    pen = solve_penalized(lat, 0.0, xi, 1)
    np.testing.assert_allclose(pen.total_K(lat), pen.K_A[0] + pen.K_C[0])
