"""American put with a right-discontinuous exercise value, solved by backward induction.

The obstacle is checked against brute-force enumeration of two-sided stopping
times (stop at t, or stop just after t).
"""
import numpy as np

from rbsde_lab import Mark, binary_lattice, check_solution, oracle_value, solve_frozen
from rbsde_lab.process import put_obstacle, step_obstacle
from rbsde_lab.snell import policy_count

# The smallest case with a right jump: xi(0) = 2, xi(0+) = 0, xi(T) = 1
lat = binary_lattice(1)
xi = step_obstacle(lat, c=1.0, levels={0: 2.0}, jumps={0: 2.0})
sol = solve_frozen(lat, 0.0, xi)
print("Y(0) =", sol.Y.v[0], " Y(0+) =", sol.Y.vplus[0], " C jump =", sol.C_jump[0], " A =", sol.A_incr[0])
print("oracle:", oracle_value(lat, 0.0, xi))

# A put on a jump-diffusion tree; a negative mark size is a crash
lat = binary_lattice(3, 1.0, [Mark("crash", size=-0.4, intensity=0.3)])
xi = put_obstacle(lat, strike=1.0, s0=1.0, sigma=0.3)
r = 0.03
sol = solve_frozen(lat, -r * xi.v, xi)  # crude carry term, frozen per node
print("\nput value at 0:", sol.Y.v[0])
print("solution conditions, worst residual:", check_solution(lat, -r * xi.v, xi, sol).worst)

print("\npolicies per node level:", [policy_count(lat, lat.level(k).start) for k in range(lat.N + 1)])
diff = [abs(oracle_value(lat, -r * xi.v, xi, S, max_policies=10**8) - sol.Y.v[S]) for S in range(lat.n_nodes)]
print("max |Y - oracle| over all nodes:", max(diff))

# Where is it optimal to exercise?
for k in range(lat.N + 1):
    sl = lat.level(k)
    print(k, "exercise at", np.mean(sol.Y.v[sl] == xi.v[sl]) * 100, "% of nodes")
