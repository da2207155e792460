"""
The eigencurve and the stability threshold
==========================================

Every eigenvalue of the linearization at the cylinder is a sample of one
scalar function mu(s), taken at s = sigma^2 nu_j.  Here mu is tabulated,
its zero s0 located, and the threshold aspect ratio sigma_cyl read off.
"""

import math

import numpy as np

from soapfilm import eigencurve, radial

# mu(s) comes from two boundary-value solves on 1 < r < 2
s = np.linspace(0, 10, 11)
for row in eigencurve.eigencurve_samples(s):
    print(f"s = {row.s:5.1f}   mu = {row.mu:+.6f}   mu' = {row.mu_prime:+.6f}")

# at s = 0 both values are known in closed form
ln2 = math.log(2.0)
print("mu(0)  error:", abs(eigencurve.mu(0.0) - (2 / ln2 - 1)))
print("mu'(0) error:", abs(eigencurve.mu_prime(0.0) - (-2 + 3 / (2 * ln2**2) - 1 / ln2)))

# the same curve from the radial eigenfunction expansion
for K in (25, 50, 100, 200):
    print(f"K = {K:3d}: |mu(2) - mu_series(2)| = {abs(eigencurve.mu(2.0) - eigencurve.mu_series(2.0, K)):.2e}")

# mu decreases strictly, so it has exactly one zero
th = eigencurve.threshold()
print(f"s0 = {th.s0:.10f}, sigma_cyl = {th.sigma_cyl:.10f} (below sigma_crit = 1.5)")

# the spectrum changes sign at sigma_cyl: below it mu_0 > 0 (unstable)
for sigma in (1.0, th.sigma_cyl, 1.6, 2.0):
    mus = eigencurve.spectrum(sigma, 3).mus
    print(f"sigma = {sigma:.4f}:", " ".join(f"{m:+9.4f}" for m in mus))

# a coarse radial grid is enough for a quick look
coarse = radial.radial_grid(radial.FAST_N)
print("s0 on a 200-node grid:", eigencurve.find_s0(grid=coarse).s0)
