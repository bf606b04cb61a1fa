import numpy as np
import pytest

from rbsde_lab import (Mark, apriori_check, make_obstacle, binary_lattice, frozen_driver, implicit_solve, linear_driver,
                       random_obstacle, sine_driver, solve, solve_frozen)
from rbsde_lab.drivers import lipschitz_probe, make_driver
from rbsde_lab.errors import EstimateViolated, NoConvergence
from rbsde_lab.picard import fixed_point_residual
from rbsde_lab.process import constant_obstacle

from conftest import MARK, instances


def lipschitz_cases(count, seed):
    rng = np.random.default_rng(seed)
    for i in range(count):
        lat = binary_lattice(2 + i % 3, 1.0, [MARK] if i % 2 else [])
        xi = random_obstacle(lat, rng)
        if i % 3 == 0:
            drv = sine_driver(lat, kappa=rng.uniform(-1, 1), c=rng.uniform(-1, 1, lat.n_nodes))
        else:
            rho, a, b = rng.uniform(-1, 1, 3)
            drv = linear_driver(lat, rho, a, b, c=rng.uniform(-1, 1, lat.n_nodes))
        yield lat, drv, xi


def test_frozen_driver_converges_in_two_sweeps():
    lat = binary_lattice(3, 1.0, [MARK])
    xi = random_obstacle(lat, np.random.default_rng(0))
    f = np.random.default_rng(1).uniform(-1, 1, lat.n_nodes)
    sol, diag = solve(lat, frozen_driver(f), xi)
    assert diag.iterations_used == 2 and diag.iterates[-1] == 0.0
    np.testing.assert_array_equal(sol.Y.v, solve_frozen(lat, f, xi).Y.v)


def test_discount_against_implicit_recursion():
    lat = binary_lattice(4)
    xi = random_obstacle(lat, np.random.default_rng(4), scale=0.2).shift(-2.0)
    drv = linear_driver(lat, rho=0.1)
    sol, _ = solve(lat, drv, xi, beta=25.0, tol=1e-16, max_iter=500)
    ref = implicit_solve(lat, drv, xi)
    assert abs(sol.Y.v[0] - ref.v[0]) <= 1e-9
    np.testing.assert_allclose(sol.Y.vplus, ref.vplus, atol=1e-9)


def test_contraction_and_uniqueness():
    for lat, drv, xi in lipschitz_cases(30, seed=11):
        assert drv.lipschitz_K <= 1
        s0, d0 = solve(lat, drv, xi, beta=25.0, tol=1e-16, max_iter=500)
        s1, _ = solve(lat, drv, xi, beta=25.0, tol=1e-16, max_iter=500, init=1.0)
        assert np.all(d0.ratios < 1), d0.ratios
        assert np.max(np.abs(s0.Y.v - s1.Y.v)) <= 1e-9
        assert np.max(np.abs(s0.Y.vplus - s1.Y.vplus)) <= 1e-9
        assert fixed_point_residual(lat, drv, xi, s0, 25.0) <= 1e-16
        ref = implicit_solve(lat, drv, xi)
        assert np.max(np.abs(s0.Y.vplus - ref.vplus)) <= 1e-9


def test_no_convergence_reports_diagnostics():
    lat = binary_lattice(3)
    drv = linear_driver(lat, rho=-0.9)
    with pytest.raises(NoConvergence) as exc:
        solve(lat, drv, make_obstacle(lat, lambda n: (-50.0, -50.0), 1.0), tol=1e-30, max_iter=3)
    assert exc.value.diagnostics.iterations_used == 3


def test_lipschitz_probe_respects_declared_constant(rng):
    lat = binary_lattice(2, 1.0, [MARK])
    for name, params in [("linear", dict(rho=0.5, a=-0.7, b=0.9)), ("sin", dict(kappa=0.8))]:
        drv = make_driver(lat, name, params)
        assert lipschitz_probe(drv, lat, rng) <= drv.lipschitz_K + 1e-12


def test_apriori_examples():
    lat = binary_lattice(3, 1.0, [MARK])
    xi = constant_obstacle(lat, -50.0)
    f = np.random.default_rng(0).uniform(-1, 1, lat.n_nodes)
    same = apriori_check(lat, f, f, xi, epsilon=0.5)
    assert same.lhs == 0.0 and same.rhs == 0.0
    shifted = apriori_check(lat, f, f + 1, xi, epsilon=0.5)
    assert shifted.lhs <= shifted.rhs


def test_apriori_random_pairs():
    rng = np.random.default_rng(21)
    for lat, f1, xi in instances(60, seed=21):
        f2 = rng.uniform(-1, 1, lat.n_nodes)
        for eps in (0.2, 0.5, 1.0):
            rep = apriori_check(lat, f1, f2, xi, eps)
            assert rep.lhs <= rep.rhs


def test_apriori_violation_raises(monkeypatch):
    import rbsde_lab.picard as picard

    lat = binary_lattice(2)
    xi = constant_obstacle(lat, -5.0)
    monkeypatch.setattr(picard, "h2_norm_beta", lambda lat, phi, beta: 1.0 if np.ndim(phi) == 1 else 0.0)
    with pytest.raises(EstimateViolated):
        picard.apriori_check(lat, np.zeros(lat.n_nodes), np.ones(lat.n_nodes), xi, 0.1)
