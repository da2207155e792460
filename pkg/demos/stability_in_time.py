"""
Stability of the cylinder in time
=================================

A small bulge of the cylinder decays for sigma > sigma_cyl and grows for
sigma < sigma_cyl.  In the linear regime the rate is mu_0(sigma).
"""

from soapfilm import dynamics, eigencurve, stationary
from soapfilm.grid import LAMBDA_CYL, FilmProfile

zgrid = stationary.default_zgrid()
u0 = FilmProfile(zgrid, 1e-3 * eigencurve.dirichlet_mode(0, zgrid.nodes))

for sigma, T, window in ((1.6, 3.0, (0.5, 3.0)), (1.0, 2.5, (0.2, 2.5))):
    traj = dynamics.evolve(u0, T, 1e-3, LAMBDA_CYL, sigma, keep_states=0)
    rate = dynamics.measured_rate(traj, window)
    mu0 = eigencurve.spectrum(sigma, 0).mus[0]
    print(f"sigma = {sigma}: sup|u| {traj.sup_norms[0]:.2e} -> {traj.sup_norms[-1]:.2e}, "
          f"rate {rate:+.4f}, mu_0 {mu0:+.4f}")

# a film squeezed almost to the axis pinches off; the run stops with an event
neck = FilmProfile.from_function(zgrid, lambda z: -0.9 * (1 - z**2))
traj = dynamics.evolve(neck, 1.0, 1e-3, 0.0, 1.6)
print(f"event: {traj.event.kind} at node {traj.event.node}, t = {traj.event_time:.3f}")
