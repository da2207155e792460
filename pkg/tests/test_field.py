import math

import numpy as np
import pytest
from scipy import special
from hypothesis import given, settings, strategies as st

from soapfilm import eigencurve as ec
from soapfilm import field, radial
from soapfilm.grid import AdmissibilityError, FilmProfile, Grid1D, ZFunction

LN2 = math.log(2.0)
SIGMA = 1.6


def zg(n):
    return field.z_grid(n)


def rg(n):
    return field.default_rgrid(n)


def film(zgrid, func):
    return FilmProfile.from_function(zgrid, func)


def phi_j(j, zgrid):
    return ec.dirichlet_mode(j, zgrid.nodes)


# ---- cylindrical Poisson ------------------------------------------------------------

XI0 = 9.753322124750714  # smallest radial eigenvalue, from the Bessel cross-product roots


def _rho0(r):
    k = math.sqrt(XI0)
    return special.j0(k * r) * special.y0(k) - special.y0(k * r) * special.j0(k)


def _separable_error(nz, nr, j=1):
    zgrid, rgrid = zg(nz), rg(nr)
    exact = np.outer(phi_j(j, zgrid), _rho0(rgrid.nodes))
    rhs = field.PotentialField(zgrid, rgrid, (XI0 + SIGMA**2 * ec.dirichlet_eigenvalue(j)) * exact)
    out = field.solve_cyl_poisson(rhs, SIGMA)
    return np.max(np.abs(out.values - exact)) / np.max(np.abs(exact))


def test_poisson_separable_eigenfunction():
    errs = [_separable_error(n, m) for n, m in ((31, 15), (63, 31), (127, 63))]
    assert errs[-1] < 2e-4
    order = math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])
    assert min(order) > 1.8


def test_poisson_zero_rhs():
    zgrid, rgrid = zg(15), rg(7)
    out = field.solve_cyl_poisson(field.PotentialField(zgrid, rgrid, np.zeros((17, 9))), SIGMA)
    assert np.all(out.values == 0.0)


def test_poisson_reproduces_h_s():
    zgrid, rgrid = zg(63), rg(127)
    s = SIGMA**2 * ec.dirichlet_eigenvalue(0)
    r = rgrid.nodes
    p0 = phi_j(0, zgrid)
    rhs = np.outer(p0, radial.source_c(r) + s * radial.source_d(r))
    out = field.solve_cyl_poisson(field.PotentialField(zgrid, rgrid, rhs), SIGMA)
    h = radial.solve_h(s, rgrid)
    # the z direction is resolved to O(hz^2), so compare with a matching tolerance
    err = np.max(np.abs(out.values - np.outer(p0, h.values))) / np.max(np.abs(h.values))
    assert err < 1e-3


def test_poisson_rejects_bad_sigma():
    zgrid, rgrid = zg(7), rg(7)
    with pytest.raises(ValueError):
        field.solve_cyl_poisson(field.PotentialField(zgrid, rgrid, np.zeros((9, 9))), 0.0)


# ---- coefficients ----------------------------------------------------------------

def test_coefficients_at_cylinder():
    zgrid, rgrid = zg(15), rg(7)
    coef = field.assemble_transformed(FilmProfile.zero(zgrid), SIGMA, rgrid)
    R = np.broadcast_to(rgrid.nodes, (17, 9))
    assert np.all(coef.a11 == SIGMA**2)
    assert np.all(coef.a12 == 0.0)
    assert np.all(coef.a22 == 1.0)
    np.testing.assert_allclose(coef.d2, 1.0 / R, rtol=1e-15)


@settings(max_examples=40, deadline=None)
@given(amp=st.floats(-0.95, 0.95), m=st.integers(0, 4), sigma=st.floats(0.3, 4.0))
def test_determinant_is_sigma_squared(amp, m, sigma):
    zgrid, rgrid = zg(31), rg(9)
    v = film(zgrid, lambda z: amp * np.cos((2 * m + 1) * np.pi * z / 2))
    coef = field.assemble_transformed(v, sigma, rgrid)
    assert np.all(coef.a11 > 0)
    np.testing.assert_allclose(coef.determinant, sigma**2, rtol=1e-9)


def test_coefficients_reject_inadmissible():
    zgrid = zg(15)
    bad = ZFunction(zgrid, np.where(np.abs(zgrid.nodes) < 1, 1.0, 0.0))
    with pytest.raises(AdmissibilityError):
        field.assemble_transformed(bad, SIGMA)
    with pytest.raises(AdmissibilityError):
        FilmProfile(zgrid, bad.values)


# ---- transformed operator ---------------------------------------------------------

def test_transformed_operator_on_harmonic_quadratic():
    zgrid, rgrid = zg(15), rg(9)
    w = field.PotentialField.from_function(zgrid, rgrid, lambda Z, R: R**2 - 2 * Z**2 / SIGMA**2)
    out = field.apply_transformed(FilmProfile.zero(zgrid), SIGMA, w)
    assert np.max(np.abs(out)) < 1e-9


def test_transformed_operator_on_log_is_second_order():
    errs = []
    for n in (32, 64, 128):
        zgrid, rgrid = zg(2 * n - 1), rg(n - 1)
        w = field.PotentialField.from_function(zgrid, rgrid, lambda Z, R: np.log(R))
        errs.append(np.max(np.abs(field.apply_transformed(FilmProfile.zero(zgrid), SIGMA, w))))
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_lift_source_matches_stencil():
    # f_v is evaluated analytically in r; the stencil on ln(r)/ln(2) agrees to O(h^2)
    # away from z = +-1 and to O(h) on the first interior rows, where the
    # one-sided v_z enters the cross term
    errs, edge = [], []
    for n in (16, 32, 64):
        zgrid, rgrid = zg(2 * n - 1), rg(n - 1)
        v = film(zgrid, lambda z: 0.3 * np.cos(np.pi * z / 2) - 0.1 * np.cos(3 * np.pi * z / 2))
        coef = field.assemble_transformed(v, SIGMA, rgrid)
        lift = field.PotentialField.from_function(zgrid, rgrid, lambda Z, R: np.log(R) / LN2)
        d = np.abs(field._lift_source(v.values, zgrid, rgrid, SIGMA, coef)
                   - field.apply_transformed(v, SIGMA, lift))
        errs.append(d[1:-1].max())
        edge.append(max(d[0].max(), d[-1].max()))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5
    assert edge[0] / edge[1] > 1.6 and edge[1] / edge[2] > 1.8


def test_refine_profile_keeps_nodes_and_cubics():
    zgrid = zg(15)
    v = film(zgrid, lambda z: (1 - z**2) * (0.3 * z + 0.1))
    fine = field.refine_profile(v, 4)
    assert fine.zgrid.n == 16 * 4 - 1
    np.testing.assert_array_equal(fine.values[::4], v.values)
    np.testing.assert_allclose(fine.values, (1 - fine.zgrid.nodes**2) * (0.3 * fine.zgrid.nodes + 0.1),
                               atol=1e-14)
    assert field.refine_profile(v, 1) is v
    with pytest.raises(ValueError):
        field.refine_profile(v, 0)


# ---- potential and trace ------------------------------------------------------------

def test_phi_at_cylinder_is_exact():
    zgrid, rgrid = zg(31), rg(15)
    phi = field.solve_phi(FilmProfile.zero(zgrid), SIGMA, rgrid)
    Z, R = phi.mesh
    assert np.all(phi.values == np.log(R) / LN2)


def test_phi_boundary_values():
    zgrid, rgrid = zg(31), rg(15)
    v = film(zgrid, lambda z: 0.4 * np.cos(np.pi * z / 2))
    phi = field.solve_phi(v, SIGMA, rgrid)
    np.testing.assert_allclose(phi.values[:, 0], 0.0, atol=1e-15)
    np.testing.assert_allclose(phi.values[:, -1], 1.0, atol=1e-15)
    np.testing.assert_allclose(phi.values[0], np.log(rgrid.nodes) / LN2, atol=1e-15)


def test_phi_even_for_even_film():
    zgrid, rgrid = zg(31), rg(15)
    v = film(zgrid, lambda z: 0.3 * np.cos(np.pi * z / 2) + 0.1 * np.cos(3 * np.pi * z / 2))
    phi = field.solve_phi(v, SIGMA, rgrid)
    assert np.max(np.abs(phi.values - phi.values[::-1])) < 1e-12


def test_phi_linear_prediction_is_second_order():
    zgrid, rgrid = zg(63), rg(31)
    p0 = phi_j(0, zgrid)
    r = rgrid.nodes
    # D phi|_0 v = (1/ln2)(-Delta_cyl,D)^{-1}[-2/r^3 v - sigma^2 (2-r)/r v_zz], with v_zz = -nu_0 v
    src = np.outer(p0, radial.source_c(r) + SIGMA**2 * ec.dirichlet_eigenvalue(0) * radial.source_d(r))
    dphi = field.solve_cyl_poisson(field.PotentialField(zgrid, rgrid, src), SIGMA).values / LN2
    phi0 = np.log(r) / LN2
    errs = []
    for eps in (0.05, 0.025, 0.0125):
        phi = field.solve_phi(FilmProfile(zgrid, eps * p0), SIGMA, rgrid)
        errs.append(np.max(np.abs(phi.values - phi0 - eps * dphi)))
    assert errs[0] < 2e-3
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_trace_examples():
    zgrid, rgrid = zg(7), rg(5)
    quad = field.PotentialField.from_function(zgrid, rgrid, lambda Z, R: (R - 1) * (2 - R))
    np.testing.assert_allclose(field.boundary_gradient_trace(quad).values, 1.0, rtol=1e-13)
    zero = field.PotentialField(zgrid, rgrid, np.zeros((9, 7)))
    assert np.all(field.boundary_gradient_trace(zero).values == 0.0)
    phi0 = field.solve_phi(FilmProfile.zero(zgrid), SIGMA, rgrid)
    np.testing.assert_allclose(field.boundary_gradient_trace(phi0).values, 1 / LN2, rtol=1e-15)
    assert 1 / LN2 == pytest.approx(1.4426950, abs=1e-7)
    thin = field.PotentialField(zgrid, Grid1D(1.0, 2.0, 0), np.zeros((9, 2)))
    with pytest.raises(ValueError):
        field.boundary_gradient_trace(thin)


def test_trace_of_plain_log_is_second_order():
    errs = []
    for n in (15, 31, 63):
        phi = field.PotentialField.from_function(zg(5), rg(n), lambda Z, R: np.log(R) / LN2)
        errs.append(np.max(np.abs(field.boundary_gradient_trace(phi).values - 1 / LN2)))
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


# ---- force -------------------------------------------------------------------------

def test_force_at_cylinder():
    for nz, nr in ((15, 7), (127, 63)):
        g = field.electrostatic_force(FilmProfile.zero(zg(nz)), SIGMA, rg(nr))
        np.testing.assert_allclose(g.values, 1 / LN2**2, rtol=1e-14)
    assert 1 / LN2**2 == pytest.approx(2.0813690, abs=1e-7)


def test_force_even_for_even_film():
    zgrid = zg(31)
    v = film(zgrid, lambda z: -0.2 * np.cos(np.pi * z / 2) + 0.05 * np.cos(5 * np.pi * z / 2))
    g = field.electrostatic_force(v, SIGMA, rg(15))
    assert np.max(np.abs(g.values - g.values[::-1])) < 1e-12


def test_force_refined_grid_samples_film_nodes():
    zgrid = zg(31)
    v = film(zgrid, lambda z: 0.1 * np.cos(np.pi * z / 2))
    g1 = field.electrostatic_force(v, SIGMA, rg(15))
    g2 = field.electrostatic_force(v, SIGMA, rg(15), zrefine=2)
    assert g2.zgrid == zgrid
    assert np.max(np.abs(g1.values - g2.values)) < 5e-3


def test_force_grid_convergence():
    # frozen values of g(0.1 phi_0) at z = 0 on 65x33, 129x65, 257x129 tensor grids
    vals = []
    for n in (32, 64, 128):
        zgrid = zg(2 * n - 1)
        v = FilmProfile(zgrid, 0.1 * phi_j(0, zgrid))
        vals.append(field.electrostatic_force(v, SIGMA, rg(n - 1)).values[n])
    np.testing.assert_allclose(vals, [3.04457, 3.04766, 3.04849], atol=2e-5)
    order = math.log2((vals[1] - vals[0]) / (vals[2] - vals[1]))
    assert 1.7 < order < 2.3


def test_force_derivative_matches_difference_quotient():
    zgrid, rgrid = zg(63), rg(31)
    v = ZFunction(zgrid, phi_j(0, zgrid) + 0.5 * phi_j(2, zgrid))
    dg = field.force_derivative(v, SIGMA, rgrid).values
    g0 = 1 / LN2**2
    errs = []
    for eps in (1e-3, 5e-4):
        g = field.electrostatic_force(FilmProfile(zgrid, eps * v.values), SIGMA, rgrid).values
        errs.append(np.max(np.abs((g - g0) / eps - dg)) / np.max(np.abs(dg)))
    assert errs[0] < 1e-2
    assert 1.7 < errs[0] / errs[1] < 2.3
    g = field.electrostatic_force(FilmProfile(zgrid, 1e-4 * v.values), SIGMA, rgrid).values
    assert np.max(np.abs((g - g0) / 1e-4 - dg)) / np.max(np.abs(dg)) < 1e-3


def test_force_derivative_requires_vanishing_ends():
    zgrid = zg(15)
    with pytest.raises(ValueError):
        field.force_derivative(ZFunction(zgrid, np.ones(17)), SIGMA, rg(7))


# ---- linearized operator ------------------------------------------------------------

def _eigen_errors(nz, nr, sigma, js=range(4)):
    zgrid, rgrid = zg(nz), rg(nr)
    mus = ec.spectrum(sigma, max(js)).mus
    errs = []
    for j in js:
        p = ZFunction(zgrid, phi_j(j, zgrid))
        out = field.apply_linearized(p, sigma, rgrid).values
        errs.append(np.linalg.norm(out - mus[j] * p.values) / np.linalg.norm(mus[j] * p.values))
    return errs


@pytest.mark.parametrize("sigma", [1.0, 1.6])
def test_linearized_eigenfunctions_production_grid(sigma):
    # 257 x 129 tensor grid
    errs = _eigen_errors(255, 127, sigma, js=range(5))
    assert max(errs) <= 1e-3


def test_linearized_eigenfunctions_below_threshold():
    errs = _eigen_errors(127, 63, 1.0, js=range(3))
    assert max(errs) <= 3e-3


def test_linearized_zero():
    zgrid = zg(15)
    out = field.apply_linearized(ZFunction(zgrid, np.zeros(17)), SIGMA, rg(7))
    assert np.all(out.values == 0.0)


def test_linearized_fourier_form():
    zgrid, rgrid = zg(127), rg(63)
    p0, p2 = phi_j(0, zgrid), phi_j(2, zgrid)
    out = field.apply_linearized(ZFunction(zgrid, p0 + 0.3 * p2), SIGMA, rgrid).values
    nu = ec.dirichlet_eigenvalue(np.array([0, 2]))
    m0, m2 = (ec.mu_series(SIGMA**2 * n, 200) for n in nu)
    expected = m0 * p0 + 0.3 * m2 * p2
    assert np.linalg.norm(out - expected) / np.linalg.norm(expected) < 2e-3
    # coefficients in the Dirichlet basis
    h = zgrid.h
    c0 = h * np.sum(out * p0)
    c2 = h * np.sum(out * p2)
    assert c0 == pytest.approx(m0, rel=5e-3)
    assert c2 == pytest.approx(0.3 * m2, rel=5e-3)
    assert abs(h * np.sum(out * phi_j(1, zgrid))) < 1e-12


def test_linearized_self_adjoint():
    zgrid, rgrid = zg(63), rg(31)
    rng = np.random.default_rng(7)
    for _ in range(5):
        w1, w2 = np.zeros(65), np.zeros(65)
        w1[1:-1], w2[1:-1] = rng.standard_normal(63), rng.standard_normal(63)
        a1 = field.apply_linearized(ZFunction(zgrid, w1), SIGMA, rgrid).values
        a2 = field.apply_linearized(ZFunction(zgrid, w2), SIGMA, rgrid).values
        scale = np.linalg.norm(a1) * np.linalg.norm(w2)
        assert abs(np.dot(a1, w2) - np.dot(w1, a2)) <= 1e-8 * scale
