"""Hand-derived expected values, fixed before the solvers were run against them."""

import math

# lattice with one mark of rate 0.2 on a unit step
MARKED_PROBS = (0.4, 0.4, 0.1, 0.1)
COND_EXPECT_2055 = 1.8
COMPENSATED_NO_JUMP = -0.2
COMPENSATED_JUMP = 0.8
N2_BINARY_NODES = 7

# projection of {1, -1, 2, -2} on the marked node: 2x2 normal equations by hand
REPR_Z = 1.2
REPR_PSI = 0.0
REPR_RESIDUAL = (-0.2, 0.2, 0.8, -0.8)

SUP_NORM_3_MINUS1 = 5.0
H2_ONE_BETA1 = math.e - 1.0
LPI_MARK_ONE = 0.2

# N=1 right-jump instance: xi.v(root)=2, xi.vplus(root)=0, xi_T=1
RJ_Y_V = 2.0
RJ_Y_VPLUS = 1.0
RJ_C = 1.0
RJ_A = 0.0
RJ_ORACLE = 2.0
RJ_F1_Y_VPLUS = 2.0
RJ_F1_C = 0.0

# penalized scalar step, E=1, xi.vplus=2, dt=1: y = (1 + 2n) / (1 + n)
PEN_GAP_CLOSED = {1: 1 / 2, 10: 1 / 11, 100: 1 / 101, 1000: 1 / 1001}
PEN_Y_N1 = 1.5
# the gap table stated in acceptance criterion 6 for the same sequence
PEN_GAP_TABLE = {1: 0.5, 10: 0.0455, 100: 0.00495, 1000: 0.0005}

# discount of a constant terminal c=2 under f = -rho y, rho=0.1, N=4, T=1
DISCOUNT_C = 2.0
DISCOUNT_RHO = 0.1
DISCOUNT_VALUE = 2.0 * (1.0 + 0.1 * 0.25) ** -4  # 1.81190128959951...

# pure right jump 2 -> 1 at 0, constant after, beta=0
GL_RIGHT_JUMP_RHS = 1.0
