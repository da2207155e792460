"""
Stationary films near the cylinder
==================================

At lambda = ln(2)^2 the cylinder u = 0 is stationary for every aspect
ratio.  For sigma > sigma_cyl a branch of symmetric films passes through it,
and the films bulge outwards as lambda grows.  This script follows the branch
and compares its slope with the cosine series for du/dlambda.
"""

import numpy as np

from soapfilm import stationary
from soapfilm.grid import LAMBDA_CYL

sigma = 1.6

# continuation in lambda, spacing 0.005, warm-started from the cylinder
branch = stationary.continue_branch(LAMBDA_CYL - 0.02, LAMBDA_CYL + 0.015, 8, sigma)
for p in branch:
    print(f"lambda - lambda_cyl = {p.lam - LAMBDA_CYL:+.3f}   u(0) = {p.u.values[32]:+.5f}"
          f"   residual = {p.residual_norm:.1e}   iterations = {p.newton_iters}")

# films are ordered: a larger lambda gives a film further out at every node
print("ordering violations:", stationary.ordering_violations(branch))

# the slope at the cylinder from its cosine series, with the positivity certificate
series, cert = stationary.dlambda_u_at_cyl(sigma)
print(f"du/dlambda(0) = {series.values[32]:.4f}")
print(f"C1 = {cert.C1:.4f} >= 2/(3 pi^2 sigma^2) = {cert.C1_lower_bound:.4f}: {cert.holds}")

report = stationary.deflection_check(branch, sigma)
for eps, err in sorted(report.centered_errors.items()):
    print(f"centered quotient, eps = {eps}: relative L2 error {err:.2%}")
for eps, err in sorted(report.forward_errors.items()):
    print(f"forward quotient,  eps = {eps}: relative L2 error {err:.2%}")

# the branch is a graph over lambda only up to a turning point a little
# beyond lambda_cyl + 0.018; continuation past it stops with BranchError
try:
    stationary.continue_branch(LAMBDA_CYL, LAMBDA_CYL + 0.02, 5, sigma)
except stationary.BranchError as exc:
    print(f"stopped at lambda_cyl + {exc.lam - LAMBDA_CYL:.3f} after {len(exc.partial)} points")
