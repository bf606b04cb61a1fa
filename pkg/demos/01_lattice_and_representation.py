"""A one-step tree with a jump mark, and how a martingale increment splits on it."""
import numpy as np

from rbsde_lab import Mark, binary_lattice, cond_expect, represent

# Binary Brownian block crossed with "no jump" / "jump u"; rate 0.2 on a unit step
lat = binary_lattice(1, 1.0, [Mark("u", size=-0.3, intensity=0.2)])
print(lat)
print("probabilities:", lat.probs[0])
print("dW per branch:", lat.dw[0])
print("compensated jump per branch:", lat.dpi[0][:, 0])

# Exact conditional expectation from branch values
print("E[{2,0,5,5}] =", cond_expect(lat, 0, {0: 2, 1: 0, 2: 5, 3: 5}))

# Four branches but only two regressors, so a residual orthogonal martingale is left over
rep = represent(lat, 0, [1.0, -1.0, 2.0, -2.0])
print("z =", rep.z, " psi =", rep.psi_map(lat))
print("residual dM:", rep.residual)
p = lat.probs[0]
print("E[dM], E[dM dW], E[dM dpi] =",
      p @ rep.residual, p @ (rep.residual * lat.dw[0]), p @ (rep.residual * lat.dpi[0][:, 0]))

# Deeper trees grow as branches ** N
for N in range(1, 5):
    print(N, binary_lattice(N, 1.0, [Mark("u", 0, 0.2)]).n_nodes)
