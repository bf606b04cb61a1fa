"""Reading stopping rules and a dynamic risk measure off the reflected solution."""
import numpy as np

from rbsde_lab import (Mark, binary_lattice, check_epsilon_optimality, frozen_driver, linear_driver,
                       optimal_time_lusc, random_obstacle, risk_measure, solve_frozen, zero_driver)
from rbsde_lab.errors import LuscViolated
from rbsde_lab.process import put_obstacle

rng = np.random.default_rng(7)
lat = binary_lattice(3, 1.0, [Mark("u", -0.3, 0.2)])
xi = random_obstacle(lat, rng)
sol = solve_frozen(lat, 0.0, xi)

# stop the first time Y is within eps of the obstacle
for eps in (1.0, 0.1, 0.01):
    r = check_epsilon_optimality(lat, zero_driver(), xi, 0, eps, sol=sol)
    print(f"eps={eps:5}: Y_0={r.Y_S:.4f}  value={r.value:.4f}  gap={r.gap:.2e}  stopping points={r.stops}")

# with a linear driver only the ratio gap / eps is reported
drv = linear_driver(lat, rho=0.3, a=0.2)
r = check_epsilon_optimality(lat, drv, xi, 0, 0.1)
print("linear driver, gap / eps =", r.empirical_C)

# first hitting time: exact when no node falls below the level inherited from its parent
put = put_obstacle(lat, interval="lower")
_, r = optimal_time_lusc(lat, solve_frozen(lat, 0.0, put), put, 0)
print("\nfirst hitting time on a put held at its lower envelope: gap", r.gap)
try:
    hold = put_obstacle(lat, interval="hold")
    optimal_time_lusc(lat, solve_frozen(lat, 0.0, hold), hold, 0)
except LuscViolated as exc:
    print("held put:", exc)

# risk of a position is minus the value; a larger payoff is less risky
f = rng.uniform(-0.5, 0.5, lat.n_nodes)
rep = risk_measure(lat, frozen_driver(f), xi, xi.shift(0.2))
print("\nrisk at 0:", rep.v[0], " risk of the shifted payoff:", rep.v_other[0], " violations:", rep.violations)
