"""Reflected BSDEs with làdlàg obstacles on finite scenario lattices."""

from .drivers import DRIVERS, Driver, frozen_driver, linear_driver, make_driver, sine_driver, zero_driver
from .errors import *  # noqa: F401,F403
from .glcheck import LadlagDecomposition, from_solution, random_decomposition, verify_formula
from .lattice import Lattice, LatticeSpec, Mark, MarkSpace, binary_lattice, build_lattice, cond_expect
from .penalization import convergence_table, solve_penalized
from .picard import apriori_check, implicit_solve, solve
from .process import (OBSTACLES, Obstacle, OptionalProcess, make_obstacle, norm_report,
                      random_obstacle)
from .representation import represent, represent_level
from .snell import RbsdeSolution, StoppingTime, check_solution, oracle_value, solve_frozen
from .stopping import (check_epsilon_optimality, epsilon_optimal_time, f_expectation,
                       optimal_time_lusc, risk_measure)

__version__ = "0.1.0"
