"""The eigencurve profile mu(s), its zero s0 and the linearized spectrum at the cylinder.

The eigenvalues of the linearization at u = 0, lambda = ln(2)^2 are
``mu_j(sigma) = mu(sigma^2 nu_j)`` with ``nu_j = (j + 1)^2 pi^2 / 4``, and

    mu(s) = -s + 3 + 2 h_s'(1)

where h_s solves the radial boundary value problem of :func:`radial.solve_h`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, TextIO

import numpy as np

from . import radial
from .grid import Grid1D, fmt_float

LN2 = math.log(2.0)

#: closed-form values at s = 0
MU_0 = 2.0 / LN2 - 1.0
MU_PRIME_0 = -2.0 + 3.0 / (2.0 * LN2**2) - 1.0 / LN2
DH0_AT_1 = 1.0 / LN2 - 2.0
DP0_AT_1 = 3.0 / (4.0 * LN2**2) - 1.0 / (2.0 * LN2) - 0.5

# fluxes at r = 1 of the s = 0 solutions with sources -2/r^3 and (2 - r)/r;
# used to subtract the slowly converging part of the eigenfunction series
_FLUX0_C = DH0_AT_1
_FLUX0_D = 5.0 / (4.0 * LN2) - 1.5

#: bracket for the zero of mu; mu > 0 below 2/ln2 - 1 and mu < 0 beyond mu(0)/0.3
S0_BRACKET = (1.8, 6.3)


@dataclass(frozen=True)
class EigencurveSample:
    s: float
    mu: float
    mu_prime: float


@dataclass(frozen=True)
class SpectrumReport:
    sigma: float
    mus: np.ndarray
    nu: np.ndarray


@dataclass(frozen=True)
class ThresholdReport:
    s0: float
    sigma_cyl: float
    bracket: tuple[float, float]
    residual: float


class BracketError(RuntimeError):
    """mu has the wrong sign at an end of the analytic bracket."""


def dirichlet_eigenvalue(j) -> np.ndarray | float:
    """nu_j = (j + 1)^2 pi^2 / 4, eigenvalues of -d^2/dz^2 on (-1, 1)."""
    return (np.asarray(j) + 1) ** 2 * np.pi**2 / 4.0


def dirichlet_mode(j: int, z: np.ndarray) -> np.ndarray:
    """Normalized Dirichlet eigenfunction phi_j on (-1, 1)."""
    k = (j + 1) * np.pi / 2.0
    return np.cos(k * z) if j % 2 == 0 else np.sin(k * z)


def _grid(grid: Optional[Grid1D]) -> Grid1D:
    return radial.radial_grid() if grid is None else grid


def mu(s: float, grid: Optional[Grid1D] = None) -> float:
    """Eigencurve profile via the radial boundary value problem."""
    h_s = radial.solve_h(s, _grid(grid))
    return -s + 3.0 + 2.0 * radial.boundary_flux(h_s)


def mu_prime(s: float, grid: Optional[Grid1D] = None) -> float:
    """Derivative of the eigencurve profile, ``-1 + 2 p_s'(1)``."""
    if s < 0:
        raise ValueError("mu_prime is defined here for s >= 0")
    h_s = radial.solve_h(s, _grid(grid))
    return -1.0 + 2.0 * radial.boundary_flux(radial.solve_p(s, h_s))


@lru_cache(maxsize=8)
def _series_data(K: int, grid: Grid1D):
    eigs = radial.radial_eigenpairs(K, grid)
    xi = np.array([e.xi for e in eigs])
    c, d = radial.coefficients_ck_dk(eigs)
    drho = np.array([radial.boundary_flux(e.rho) for e in eigs])
    return xi, c, d, drho


def mu_series(s: float, K: int, grid: Optional[Grid1D] = None, accelerated: bool = True) -> float:
    """Eigencurve profile from the truncated eigenfunction series.

    The plain series

        -s + 3 + 2 sum_k (c_k + s d_k) rho_k'(1) / (xi_k + s)

    converges only like 1/K.  With ``accelerated`` (default) the s = 0 part of
    each sum is replaced by its closed-form value, using

        1/(xi + s) = 1/xi - s / (xi (xi + s)),

    which leaves a remainder decaying like 1/K^2.  Nothing from the boundary
    value solver enters either variant.
    """
    grid = _grid(grid)
    xi, c, d, drho = _series_data(K, grid)
    if s <= -xi[0]:
        raise ValueError(f"series needs s > -xi_0 = {-xi[0]:.6g}")
    if not accelerated:
        return float(-s + 3.0 + 2.0 * np.sum((c + s * d) * drho / (xi + s)))
    q = drho / (xi * (xi + s))
    sum_c = _FLUX0_C - s * np.sum(c * q)
    sum_d = _FLUX0_D - s * np.sum(d * q)
    return float(-s + 3.0 + 2.0 * sum_c + 2.0 * s * sum_d)


def find_s0(tol: float = 1e-8, grid: Optional[Grid1D] = None,
            bracket: tuple[float, float] = S0_BRACKET, max_iter: int = 200) -> ThresholdReport:
    """Bisection for the unique zero of mu, stopping once ``|mu(s0)| <= tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = _grid(grid)
    lo, hi = bracket
    f_lo, f_hi = mu(lo, grid), mu(hi, grid)
    if not (f_lo > 0.0 > f_hi):
        raise BracketError(f"mu({lo}) = {f_lo:.6g}, mu({hi}) = {f_hi:.6g}: no sign change")
    mid, f_mid = lo, f_lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = mu(mid, grid)
        if abs(f_mid) <= tol:
            break
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
    else:
        raise RuntimeError(f"bisection stalled at s = {mid!r} with mu = {f_mid:.3e}")
    return ThresholdReport(mid, 2.0 * math.sqrt(mid) / math.pi, tuple(bracket), abs(f_mid))


@lru_cache(maxsize=8)
def _threshold_cached(grid: Grid1D) -> ThresholdReport:
    return find_s0(grid=grid)


def threshold(grid: Optional[Grid1D] = None) -> ThresholdReport:
    """Cached :func:`find_s0` at the default tolerance."""
    return _threshold_cached(_grid(grid))


def spectrum(sigma: float, J: int, grid: Optional[Grid1D] = None) -> SpectrumReport:
    """mu_j(sigma) = mu(sigma^2 nu_j) for j = 0..J."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    grid = _grid(grid)
    nu = dirichlet_eigenvalue(np.arange(J + 1))
    mus = np.array([mu(sigma**2 * n, grid) for n in nu])
    return SpectrumReport(float(sigma), mus, nu)


def mode_bounds(sigma: float, j: int, sigma_cyl: Optional[float] = None) -> tuple[float, float]:
    """Closed-form bounds on mu_j(sigma) for sigma > sigma_cyl.

    lower = -sigma^2 nu_j (from mu(s) > -s),
    upper = -(3/10) sigma^2 (nu_j - nu_0) (mu_0 < 0 and mu' < -3/10).
    """
    if sigma_cyl is None:
        sigma_cyl = threshold().sigma_cyl
    if sigma <= sigma_cyl:
        raise ValueError(f"bounds need sigma > sigma_cyl = {sigma_cyl:.6g}")
    if j < 0:
        raise ValueError("j must be non-negative")
    nu_j, nu_0 = dirichlet_eigenvalue(j), dirichlet_eigenvalue(0)
    return float(-sigma**2 * nu_j), float(0.3 * sigma**2 * (nu_0 - nu_j))


def eigenvalue_bounds(sigma: float, j: int, sigma_cyl: Optional[float] = None) -> tuple[float, float]:
    """Bounds on the even-mode eigenvalue mu_2j(sigma), valid for sigma > sigma_cyl.

    lower = -sigma^2 (2j+1)^2 pi^2 / 4,
    upper = -(3/10)(pi^2/4) sigma^2 ((2j+1)^2 - 1)
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    return mode_bounds(sigma, 2 * j, sigma_cyl)


def eigencurve_samples(s_values: Iterable[float], grid: Optional[Grid1D] = None) -> list[EigencurveSample]:
    grid = _grid(grid)
    return [EigencurveSample(float(s), mu(s, grid), mu_prime(s, grid)) for s in s_values]


def write_eigencurve_csv(samples: Iterable[EigencurveSample], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["s", "mu", "mu_prime"])
    for row in samples:
        writer.writerow([fmt_float(row.s), fmt_float(row.mu), fmt_float(row.mu_prime)])
