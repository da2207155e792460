"""Radial Sturm-Liouville machinery on (1, 2).

The operator ``-(1/r) d/dr (r d/dr) + s`` with homogeneous Dirichlet data is
discretized in its self-adjoint form

    -(r f')' + s r f = r * rhs

by centered differences on a uniform grid.  The discrete operator is a
symmetric tridiagonal matrix plus ``s`` times the diagonal weight ``r``, so
eigenpairs are real and r-orthogonal by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .grid import Grid1D, check_same_grid, make_uniform_grid

__all__ = [
    "Grid1D",
    "RadialProfile",
    "RadialEigenpair",
    "SingularSystemError",
    "make_uniform_grid",
    "radial_grid",
    "sl_solve",
    "solve_h",
    "solve_p",
    "boundary_flux",
    "radial_eigenpairs",
    "weighted_inner",
    "coefficients_ck_dk",
    "source_c",
    "source_d",
]

#: production and fast-test resolutions (interior nodes)
PRODUCTION_N = 2000
FAST_N = 200


class SingularSystemError(ArithmeticError):
    """``s`` sits (numerically) on ``-xi_k`` for a radial eigenvalue ``xi_k``."""

    def __init__(self, message: str, xi: float, k: int):
        super().__init__(message)
        self.xi = xi
        self.k = k


@dataclass(frozen=True)
class RadialProfile:
    """Values of a function of r on a grid over [1, 2].

    ``load`` is optional: when the profile solves ``-(1/r)(r f')' = load``
    (as every :func:`sl_solve` output does), :func:`boundary_flux` uses it to
    evaluate ``f'(1)`` from the discrete flux balance instead of a bare
    difference stencil.
    """

    grid: Grid1D
    values: np.ndarray
    load: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        if self.load is not None:
            load = np.asarray(self.load, dtype=float)
            if load.shape != values.shape:
                raise ValueError("load must live on the same nodes as values")
            object.__setattr__(self, "load", load)

    @classmethod
    def from_function(cls, grid: Grid1D, func: Callable[[np.ndarray], np.ndarray]) -> "RadialProfile":
        return cls(grid, np.broadcast_to(func(grid.nodes), (grid.size,)).astype(float))

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes


@dataclass(frozen=True)
class RadialEigenpair:
    xi: float
    rho: RadialProfile
    k: int


def radial_grid(n: int = PRODUCTION_N) -> Grid1D:
    return make_uniform_grid(1.0, 2.0, n)


def _check_radial(grid: Grid1D) -> None:
    if grid.a != 1.0 or grid.b != 2.0:
        raise ValueError(f"radial grid must span [1, 2], got [{grid.a}, {grid.b}]")


@lru_cache(maxsize=16)
def _stiffness(grid: Grid1D):
    """Diagonal and off-diagonal of the discrete ``-(r f')'`` on interior nodes."""
    h = grid.h
    r = grid.interior
    rp = r + 0.5 * h
    rm = r - 0.5 * h
    diag = (rp + rm) / h**2
    off = -rp[:-1] / h**2
    return diag, off


@lru_cache(maxsize=16)
def _smallest_xi(grid: Grid1D) -> float:
    diag, off = _stiffness(grid)
    w = 1.0 / np.sqrt(grid.interior)
    xi = eigh_tridiagonal(diag * w * w, off * w[:-1] * w[1:], eigvals_only=True,
                          select="i", select_range=(0, 0))
    return float(xi[0])


def _check_invertible(s: float, grid: Grid1D, rtol: float = 1e-9) -> None:
    if s > -_smallest_xi(grid) * (1.0 - rtol):
        return
    diag, off = _stiffness(grid)
    w = 1.0 / np.sqrt(grid.interior)
    d, e = diag * w * w, off * w[:-1] * w[1:]
    # locate the discrete eigenvalue closest to -s
    below = eigh_tridiagonal(d, e, eigvals_only=True, select="v", select_range=(-np.inf, -s))
    k = below.size
    candidates = []
    if k:
        candidates.append((k - 1, below[-1]))
    above = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(k, k)) \
        if k < grid.n else []
    if len(above):
        candidates.append((k, above[0]))
    kk, xi = min(candidates, key=lambda c: abs(c[1] + s))
    if abs(xi + s) <= rtol * max(1.0, abs(s)):
        raise SingularSystemError(
            f"s = {s!r} coincides with -xi_{kk} = {-xi!r}; the radial operator is singular",
            float(xi), int(kk))


def _as_values(rhs, grid: Grid1D) -> np.ndarray:
    if isinstance(rhs, RadialProfile):
        check_same_grid(rhs.grid, grid, "right-hand side grid")
        return rhs.values
    if callable(rhs):
        return np.broadcast_to(rhs(grid.nodes), (grid.size,)).astype(float)
    values = np.asarray(rhs, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(f"right-hand side needs {grid.size} nodal values")
    return values


def sl_solve(s: float, rhs, grid: Grid1D) -> RadialProfile:
    """Solve ``-(1/r)(r f')' + s f = rhs`` on (1, 2) with ``f(1) = f(2) = 0``.

    ``rhs`` may be a :class:`RadialProfile`, an array of nodal values or a
    callable of r.  Raises :class:`SingularSystemError` when ``s`` hits
    ``-xi_k`` for a discrete radial eigenvalue.
    """
    _check_radial(grid)
    _check_invertible(s, grid)
    rhs_values = _as_values(rhs, grid)
    diag, off = _stiffness(grid)
    r = grid.interior
    ab = np.zeros((3, grid.n))
    ab[0, 1:] = off
    ab[1] = diag + s * r
    ab[2, :-1] = off
    f = np.zeros(grid.size)
    f[1:-1] = solve_banded((1, 1), ab, r * rhs_values[1:-1], check_finite=False)
    return RadialProfile(grid, f, load=rhs_values - s * f)


def source_c(r: np.ndarray) -> np.ndarray:
    """-2/r^3: source of the s-independent part of h_s."""
    return -2.0 / r**3


def source_d(r: np.ndarray) -> np.ndarray:
    """(2 - r)/r: the upper barrier for h_s and the s-weighted source."""
    return (2.0 - r) / r


def solve_h(s: float, grid: Grid1D) -> RadialProfile:
    """h_s: right-hand side ``-2/r^3 + s (2 - r)/r``."""
    r = grid.nodes
    return sl_solve(s, source_c(r) + s * source_d(r), grid)


def solve_p(s: float, h_s: RadialProfile, grid: Optional[Grid1D] = None) -> RadialProfile:
    """p_s = d h_s / ds: right-hand side ``(2 - r)/r - h_s``."""
    if grid is not None:
        check_same_grid(h_s.grid, grid, "h_s grid")
    grid = h_s.grid
    return sl_solve(s, source_d(grid.nodes) - h_s.values, grid)


def boundary_flux(f: RadialProfile) -> float:
    """Approximate ``f'(1)`` for a profile with ``f(1) = 0``.

    With a known load the half-cell flux balance of the discrete equation is
    used (2nd order, small constant); otherwise the one-sided 3-point stencil.
    """
    grid = f.grid
    if grid.size < 3:
        raise ValueError("boundary flux needs at least 3 radial nodes")
    h = grid.h
    v = f.values
    if f.load is None:
        return float((-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h))
    r0, r1 = grid.nodes[0], grid.nodes[1]
    # r f'|_{r0} = r f'|_{r0+h/2} + int_{r0}^{r0+h/2} r * load dr
    face = (r0 + 0.5 * h) * (v[1] - v[0]) / h
    cell = 0.5 * h * (0.75 * r0 * f.load[0] + 0.25 * r1 * f.load[1])
    return float((face + cell) / r0)


def radial_eigenpairs(K: int, grid: Grid1D) -> list[RadialEigenpair]:
    """The ``K`` smallest eigenpairs of ``-(1/r)(r rho')' = xi rho``, rho(1) = rho(2) = 0.

    Eigenfunctions are normalized in the r-weighted trapezoid inner product and
    signed so that ``rho_k'(1) > 0``.
    """
    _check_radial(grid)
    if K < 1:
        raise ValueError("K must be positive")
    if grid.n < 10 * K:
        raise ValueError(f"{K} modes need at least {10 * K} interior nodes, grid has {grid.n}")
    return list(_eigenpairs(K, grid))


@lru_cache(maxsize=8)
def _eigenpairs(K: int, grid: Grid1D) -> tuple:
    diag, off = _stiffness(grid)
    r = grid.interior
    w = 1.0 / np.sqrt(r)
    # symmetric reduction of the pencil (T, diag(r)): W^{-1/2} T W^{-1/2}
    xi, Y = eigh_tridiagonal(diag * w * w, off * w[:-1] * w[1:], select="i",
                             select_range=(0, K - 1))
    X = Y * w[:, None] / np.sqrt(grid.h)
    X *= np.sign(X[0])
    pairs = []
    for k in range(K):
        values = np.zeros(grid.size)
        values[1:-1] = X[:, k]
        rho = RadialProfile(grid, values, load=xi[k] * values)
        pairs.append(RadialEigenpair(float(xi[k]), rho, k))
    return tuple(pairs)


def weighted_inner(f: RadialProfile, g: RadialProfile) -> float:
    """Composite trapezoid rule for ``int_1^2 f g r dr``."""
    check_same_grid(f.grid, g.grid)
    integrand = f.values * g.values * f.grid.nodes
    return float(f.grid.h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1])))


def coefficients_ck_dk(eigs: Sequence[RadialEigenpair]) -> tuple[np.ndarray, np.ndarray]:
    """Expansion coefficients of -2/r^3 and (2 - r)/r in the radial eigenbasis."""
    if not eigs:
        raise ValueError("need at least one eigenpair")
    grid = eigs[0].rho.grid
    c_src = RadialProfile.from_function(grid, source_c)
    d_src = RadialProfile.from_function(grid, source_d)
    c = np.array([weighted_inner(c_src, e.rho) for e in eigs])
    d = np.array([weighted_inner(d_src, e.rho) for e in eigs])
    return c, d
