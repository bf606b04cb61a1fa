"""Pathwise change of variables for exp(beta t) Y^2 with left and right jumps."""
import numpy as np

from rbsde_lab import LadlagDecomposition, Mark, binary_lattice, from_solution, random_obstacle, solve_frozen, verify_formula
from rbsde_lab.glcheck import formula_terms

# Y(0) = 2 drops to 1 right after 0 and stays there
lat = binary_lattice(1)
B = np.array([-1.0, 0.0, 0.0])
dec = LadlagDecomposition(2.0, np.zeros(3), np.zeros(3), B)
rep = verify_formula(lat, dec, beta=0.0, t_index=1)
print("LHS", rep.lhs.ravel(), " RHS", rep.rhs.ravel())
print("terms on the first path:", formula_terms(lat, dec.reconstruct(lat), dec, 0.0)[0, 0])

# a reflected solution has all three kinds of motion
rng = np.random.default_rng(1)
lat = binary_lattice(3, 1.0, [Mark("u", 0.3, 0.25)])
xi = random_obstacle(lat, rng)
sol = solve_frozen(lat, rng.uniform(-1, 1, lat.n_nodes), xi)
dec = from_solution(lat, sol)
for beta in (0.0, 1.0, 5.0):
    rep = verify_formula(lat, dec, beta)
    print(f"beta={beta}: worst relative discrepancy {rep.max_discrepancy:.1e} over {len(rep.lhs)} paths")
