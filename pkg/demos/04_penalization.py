"""Penalized equations approach the reflected one from below at rate 1/n."""
import numpy as np

from rbsde_lab import binary_lattice, convergence_table, make_obstacle, random_obstacle, solve_penalized

# one binding step: E = 1, obstacle 2, so y = (1 + 2n) / (1 + n)
lat = binary_lattice(1)
xi = make_obstacle(lat, (np.array([2.0, 1, 1]), np.array([2.0, 1, 1])), 1.0)
for n in (1, 10, 100, 1000):
    y = solve_penalized(lat, 0.0, xi, n).Y.vplus[0]
    print(f"n={n:5d}  y={y:.6f}  gap={2 - y:.6f}  1/(1+n)={1 / (1 + n):.6f}")

rng = np.random.default_rng(3)
lat = binary_lattice(4)
xi = random_obstacle(lat, rng)
f = rng.uniform(-1, 1, lat.n_nodes)
print("\n       n      Y gap    |K_A-A|    |K_C-C|   n*gap")
for row in convergence_table(lat, f, xi, [1, 10, 100, 1e3, 1e4, 1e5, 1e6]):
    print(f"{row.n:8.0e} {row.y_gap:10.2e} {row.a_gap:10.2e} {row.c_gap:10.2e} {row.n * row.y_gap:7.3f}")
