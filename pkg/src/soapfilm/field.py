"""Elliptic solves on the fixed rectangle (-1, 1) x (1, 2).

Arrays on the tensor grid are indexed ``[z_index, r_index]`` and include the
boundary nodes.  Interior unknowns are flattened z-major.

The potential between film and outer cylinder is pulled back to the rectangle
by ``(z, r) -> (z, (r - 2 v(z)) / (1 - v(z)))``.  There it solves
``-L_v phi = 0`` with ``phi = ln(r)/ln(2)`` on the boundary, where

    L_v w = div(A(v) grad w) + d(v) . grad w,
    A(v) = [[s2 (1 - v),          -s2 v_z (2 - r)],
            [-s2 v_z (2 - r),  (1 + s2 v_z^2 (2 - r)^2) / (1 - v)]],
    d(v) = (0, 1 / (2 v + (1 - v) r)),        s2 = sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from . import radial
from .grid import (Grid1D, ZFunction, FilmProfile, check_admissible, check_same_grid,
                   first_difference, make_uniform_grid, second_difference)

LN2 = math.log(2.0)

#: interior radial nodes used by the field solves unless told otherwise
DEFAULT_NR = 31

#: relative residual accepted from the sparse direct solves
LINEAR_RTOL = 1e-9


class LinearSolveError(ArithmeticError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def default_rgrid(n: int = DEFAULT_NR) -> Grid1D:
    return make_uniform_grid(1.0, 2.0, n)


def z_grid(n: int) -> Grid1D:
    return make_uniform_grid(-1.0, 1.0, n)


@dataclass(frozen=True)
class PotentialField:
    """Nodal values on the tensor grid of the rectangle.

    ``lift`` (optional) is a smooth part of ``values`` whose r-derivative at
    r = 1 is known exactly (``lift_flux``, one value per z node); the trace
    only differentiates ``values - lift`` numerically.
    """

    zgrid: Grid1D
    rgrid: Grid1D
    values: np.ndarray
    lift: Optional[np.ndarray] = None
    lift_flux: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.zgrid.size, self.rgrid.size):
            raise ValueError(f"values must have shape {(self.zgrid.size, self.rgrid.size)}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, zgrid: Grid1D, rgrid: Grid1D, func) -> "PotentialField":
        Z, R = np.meshgrid(zgrid.nodes, rgrid.nodes, indexing="ij")
        return cls(zgrid, rgrid, np.broadcast_to(func(Z, R), Z.shape).astype(float))

    @property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.zgrid.nodes, self.rgrid.nodes, indexing="ij")


@dataclass(frozen=True)
class CoefficientField:
    """Entries of A(v) and the radial drift d(v) at every tensor-grid node."""

    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    d2: np.ndarray

    @property
    def determinant(self) -> np.ndarray:
        return self.a11 * self.a22 - self.a12**2


def _dzz(zgrid: Grid1D) -> sp.csr_matrix:
    n, h = zgrid.n, zgrid.h
    return sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2


@lru_cache(maxsize=8)
def _cyl_factor(zgrid: Grid1D, rgrid: Grid1D, sigma: float):
    """Sparse LU of the discrete -Delta_cyl (homogeneous Dirichlet)."""
    diag, off = radial._stiffness(rgrid)
    r = rgrid.interior
    Ar = sp.diags(1.0 / r) @ sp.diags([off, diag, off], [-1, 0, 1])
    A = sp.kron(sp.identity(zgrid.n), Ar) - sigma**2 * sp.kron(_dzz(zgrid), sp.identity(rgrid.n))
    A = sp.csc_matrix(A)
    return A, splu(A)


def _checked_solve(A, lu, b: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    rtol = LINEAR_RTOL if rtol is None else rtol
    x = lu.solve(b)
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    res = float(np.linalg.norm(A @ x - b) / scale)
    if not np.all(np.isfinite(x)) or res > rtol:
        raise LinearSolveError(f"sparse solve failed, relative residual {res:.3e}", res)
    return x


def solve_cyl_poisson(rhs: PotentialField, sigma: float) -> PotentialField:
    """Solve ``-(1/r)(r f_r)_r - sigma^2 f_zz = rhs`` with f = 0 on the boundary.

    Only the interior values of ``rhs`` are used.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    zg, rg = rhs.zgrid, rhs.rgrid
    A, lu = _cyl_factor(zg, rg, float(sigma))
    x = _checked_solve(A, lu, rhs.values[1:-1, 1:-1].ravel())
    values = np.zeros((zg.size, rg.size))
    values[1:-1, 1:-1] = x.reshape(zg.n, rg.n)
    return PotentialField(zg, rg, values)


def assemble_transformed(v: FilmProfile, sigma: float, rgrid: Optional[Grid1D] = None) -> CoefficientField:
    """Nodal coefficients of the pulled-back operator L_v."""
    rgrid = default_rgrid() if rgrid is None else rgrid
    vals = np.asarray(v.values, dtype=float)
    check_admissible(vals)
    s2 = sigma**2
    vz = first_difference(vals, v.zgrid.h)[:, None]
    vv = vals[:, None]
    r = rgrid.nodes[None, :]
    a11 = np.broadcast_to(s2 * (1.0 - vv), (vals.size, r.size)).copy()
    a12 = -s2 * vz * (2.0 - r)
    a22 = (1.0 + s2 * vz**2 * (2.0 - r) ** 2) / (1.0 - vv)
    d2 = 1.0 / (2.0 * vv + (1.0 - vv) * r)
    return CoefficientField(a11, a12, a22, d2)


def _stencil(coef: CoefficientField, zgrid: Grid1D, rgrid: Grid1D) -> dict:
    """9-point weights of L_v at interior nodes, keyed by (dz, dr) offsets.

    Divergence-form differences: face-averaged a11, a22 for the principal
    terms, centered cross differences for the a12 terms.
    """
    hz, hr = zgrid.h, rgrid.h
    a11, a12, a22, d2 = coef.a11, coef.a12, coef.a22, coef.d2
    c = (slice(1, -1), slice(1, -1))
    zp, zm = (slice(2, None), slice(1, -1)), (slice(None, -2), slice(1, -1))
    rp, rm = (slice(1, -1), slice(2, None)), (slice(1, -1), slice(None, -2))

    a11p = 0.5 * (a11[zp] + a11[c])
    a11m = 0.5 * (a11[zm] + a11[c])
    a22p = 0.5 * (a22[rp] + a22[c])
    a22m = 0.5 * (a22[rm] + a22[c])
    x = 1.0 / (4.0 * hz * hr)
    return {
        (0, 0): -(a11p + a11m) / hz**2 - (a22p + a22m) / hr**2,
        (1, 0): a11p / hz**2,
        (-1, 0): a11m / hz**2,
        (0, 1): a22p / hr**2 + d2[c] / (2.0 * hr),
        (0, -1): a22m / hr**2 - d2[c] / (2.0 * hr),
        # d_z(a12 d_r w) + d_r(a12 d_z w)
        (1, 1): x * (a12[zp] + a12[rp]),
        (1, -1): -x * (a12[zp] + a12[rm]),
        (-1, 1): -x * (a12[zm] + a12[rp]),
        (-1, -1): x * (a12[zm] + a12[rm]),
    }


def _transformed_matrix(coef: CoefficientField, zgrid: Grid1D, rgrid: Grid1D) -> sp.csc_matrix:
    """Sparse matrix of -L_v on interior nodes (Dirichlet values dropped)."""
    nz, nr = zgrid.n, rgrid.n
    I, J = np.meshgrid(np.arange(nz), np.arange(nr), indexing="ij")
    rows, cols, data = [], [], []
    for (di, dj), coeff in _stencil(coef, zgrid, rgrid).items():
        Ii, Jj = I + di, J + dj
        keep = (Ii >= 0) & (Ii < nz) & (Jj >= 0) & (Jj < nr)
        rows.append((I * nr + J)[keep])
        cols.append((Ii * nr + Jj)[keep])
        data.append(-coeff[keep])
    n = nz * nr
    return sp.csc_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def apply_transformed(v: FilmProfile, sigma: float, w: PotentialField) -> np.ndarray:
    """Discrete ``L_v w`` at interior nodes, boundary values of ``w`` included."""
    check_same_grid(v.zgrid, w.zgrid, "z grid")
    coef = assemble_transformed(v, sigma, w.rgrid)
    vals = w.values
    nz, nr = w.zgrid.n, w.rgrid.n
    out = np.zeros((nz, nr))
    for (di, dj), coeff in _stencil(coef, w.zgrid, w.rgrid).items():
        out += coeff * vals[1 + di:1 + di + nz, 1 + dj:1 + dj + nr]
    return out


def _lift_source(v: np.ndarray, zgrid: Grid1D, rgrid: Grid1D, sigma: float,
                 coef: CoefficientField) -> np.ndarray:
    """f_v = L_v(ln(r)/ln(2)) at interior nodes, from the non-divergence form."""
    s2 = sigma**2
    vz = first_difference(v, zgrid.h)[1:-1, None]
    vzz = second_difference(v, zgrid.h)[:, None]
    vi = v[1:-1, None]
    r = rgrid.interior[None, :]
    drift = -s2 * (2.0 - r) * (vzz + 2.0 * vz**2 / (1.0 - vi)) + coef.d2[1:-1, 1:-1]
    return (-coef.a22[1:-1, 1:-1] / r**2 + drift / r) / LN2


def refine_profile(v: FilmProfile, factor: int) -> FilmProfile:
    """Cubic-spline interpolation of ``v`` onto a grid ``factor`` times finer.

    Every film node is also a node of the finer grid.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError("refinement factor must be a positive integer")
    if factor == 1:
        return v
    fine = z_grid((v.zgrid.n + 1) * factor - 1)
    spline = CubicSpline(v.zgrid.nodes, v.values)
    return FilmProfile(fine, spline(fine.nodes))


def solve_phi(v: FilmProfile, sigma: float, rgrid: Optional[Grid1D] = None) -> PotentialField:
    """Transformed potential ``phi_v = -L_D(v)^{-1} f_v + ln(r)/ln(2)``."""
    rgrid = default_rgrid() if rgrid is None else rgrid
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    zgrid = v.zgrid
    vals = np.asarray(v.values, dtype=float)
    coef = assemble_transformed(v, sigma, rgrid)
    lift = np.broadcast_to(np.log(rgrid.nodes) / LN2, (zgrid.size, rgrid.size))
    f_v = _lift_source(vals, zgrid, rgrid, sigma, coef)
    values = np.array(lift)
    if np.any(f_v != 0.0):
        A = _transformed_matrix(coef, zgrid, rgrid)
        corr = _checked_solve(A, splu(A), f_v.ravel())
        values[1:-1, 1:-1] += corr.reshape(zgrid.n, rgrid.n)
    return PotentialField(zgrid, rgrid, values, lift=lift,
                          lift_flux=np.full(zgrid.size, 1.0 / LN2))


def boundary_gradient_trace(phi: PotentialField) -> ZFunction:
    """``d phi / dr`` at r = 1 for every z node (one-sided 3-point stencil)."""
    if phi.rgrid.size < 3:
        raise ValueError("trace needs at least 3 radial nodes")
    w = phi.values if phi.lift is None else phi.values - phi.lift
    trace = (-3.0 * w[:, 0] + 4.0 * w[:, 1] - w[:, 2]) / (2.0 * phi.rgrid.h)
    if phi.lift_flux is not None:
        trace = trace + phi.lift_flux
    return ZFunction(phi.zgrid, trace)


def electrostatic_force(v: FilmProfile, sigma: float, rgrid: Optional[Grid1D] = None,
                        zrefine: int = 1) -> ZFunction:
    """g(v) = (1 + sigma^2 v_z^2)^{3/2} |phi_v,r(., 1)|^2 / (1 - v)^2 on the film grid.

    With ``zrefine > 1`` the potential is solved on a finer z grid carrying the
    cubic interpolant of ``v``; the trace is then sampled at the film nodes.
    """
    phi = solve_phi(refine_profile(v, zrefine), sigma, rgrid)
    trace = boundary_gradient_trace(phi).values[::zrefine]
    vals = np.asarray(v.values, dtype=float)
    vz = first_difference(vals, v.zgrid.h)
    g = (1.0 + sigma**2 * vz**2) ** 1.5 * trace**2 / (1.0 - vals) ** 2
    return ZFunction(v.zgrid, g)


def _linearized_trace(vals: np.ndarray, zgrid: Grid1D, rgrid: Grid1D, sigma: float) -> np.ndarray:
    """d_r (-Delta_cyl,D)^{-1}[-2/r^3 v - sigma^2 (2 - r)/r v_zz](., 1)."""
    vzz = second_difference(vals, zgrid.h)
    r = rgrid.nodes[None, :]
    src = np.zeros((zgrid.size, rgrid.size))
    src[1:-1, :] = radial.source_c(r) * vals[1:-1, None] - sigma**2 * radial.source_d(r) * vzz[:, None]
    f = solve_cyl_poisson(PotentialField(zgrid, rgrid, src), sigma)
    return boundary_gradient_trace(f).values


def _vanishing_values(v: ZFunction) -> np.ndarray:
    vals = np.asarray(v.values, dtype=float)
    if abs(vals[0]) > 1e-12 or abs(vals[-1]) > 1e-12:
        raise ValueError("v must vanish at z = +-1")
    vals = vals.copy()
    vals[0] = vals[-1] = 0.0
    return vals


def force_derivative(v: ZFunction, sigma: float, rgrid: Optional[Grid1D] = None) -> ZFunction:
    """Dg(0) v = (2 / ln(2)^2) (v + d_r (-Delta_cyl,D)^{-1}[...](., 1))."""
    rgrid = default_rgrid() if rgrid is None else rgrid
    vals = _vanishing_values(v)
    out = 2.0 / LN2**2 * (vals + _linearized_trace(vals, v.zgrid, rgrid, sigma))
    out[0] = out[-1] = 0.0
    return ZFunction(v.zgrid, out)


def apply_linearized(v: ZFunction, sigma: float, rgrid: Optional[Grid1D] = None) -> ZFunction:
    """Linearization at the cylinder applied to ``v`` (zero at z = +-1).

    sigma^2 v_zz + 3 v + 2 d_r (-Delta_cyl,D)^{-1}[-2/r^3 v - sigma^2 (2 - r)/r v_zz](., 1),

    which is DF(0) v + ln(2)^2 Dg(0) v.  The result is set to 0 at z = +-1.
    """
    rgrid = default_rgrid() if rgrid is None else rgrid
    vals = _vanishing_values(v)
    trace = _linearized_trace(vals, v.zgrid, rgrid, sigma)
    out = np.zeros(v.zgrid.size)
    out[1:-1] = sigma**2 * second_difference(vals, v.zgrid.h) + 3.0 * vals[1:-1] + 2.0 * trace[1:-1]
    return ZFunction(v.zgrid, out)
