"""Electrostatically loaded soap-film bridge between two rings.

Modules
-------
radial      Sturm-Liouville solves and eigenpairs on 1 < r < 2
eigencurve  mu(s), its zero s0, sigma_cyl and the spectrum mu_j(sigma)
field       potential, force g(v) and the linearization at the cylinder
stationary  residual, Newton, continuation in lambda, deflection certificate
dynamics    time integration and measured rates
cosine      odd cosine sums and their positivity bound
cli         command-line front end
"""

from . import cosine, dynamics, eigencurve, field, radial, stationary
from .cosine import OddCosineSum, positivity_bound
from .dynamics import Trajectory, evolve, measured_rate
from .eigencurve import find_s0, mu, mu_prime, mu_series, spectrum, threshold
from .field import apply_linearized, electrostatic_force, solve_phi
from .grid import (EVENT_MARGIN, LAMBDA_CYL, SIGMA_CRIT, AdmissibilityError, FilmProfile, Grid1D,
                   ZFunction, make_uniform_grid)
from .stationary import (BranchError, BranchPoint, DeflectionCertificate, NewtonError,
                         continue_branch, deflection_check, dlambda_u_at_cyl, newton_solve, residual)

__version__ = "0.1.0"

__all__ = [
    "cosine", "dynamics", "eigencurve", "field", "radial", "stationary",
    "OddCosineSum", "positivity_bound",
    "Trajectory", "evolve", "measured_rate",
    "find_s0", "mu", "mu_prime", "mu_series", "spectrum", "threshold",
    "apply_linearized", "electrostatic_force", "solve_phi",
    "EVENT_MARGIN", "LAMBDA_CYL", "SIGMA_CRIT", "AdmissibilityError", "FilmProfile", "Grid1D",
    "ZFunction", "make_uniform_grid",
    "BranchError", "BranchPoint", "DeflectionCertificate", "NewtonError",
    "continue_branch", "deflection_check", "dlambda_u_at_cyl", "newton_solve", "residual",
]
