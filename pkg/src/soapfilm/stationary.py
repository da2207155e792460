"""Stationary films: residual, Newton solve, continuation in lambda and the
direction of deflection at the cylinder.

The stationary equation on (-1, 1) reads

    F(u) + lambda g(u) = 0,   F(u) = sigma^2 u_zz / (1 + sigma^2 u_z^2) - 1/(u + 1),

with u(+-1) = 0.  The cylinder u = 0 solves it for lambda = ln(2)^2.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from . import cosine, eigencurve
from .field import electrostatic_force, z_grid
from .grid import (LAMBDA_CYL, AdmissibilityError, FilmProfile, Grid1D, ZFunction,
                   check_admissible, first_difference, fmt_float, second_difference)

#: interior z nodes of the film grid used by default
DEFAULT_NZ = 63
NEWTON_TOL = 1e-10
FD_STEP = 1e-6
DEFAULT_J = 64
#: modes screened for the excluded aspect ratios sigma^2 nu_j = s0
J_CHECK = 8
SINGULAR_TOL = 1e-6


class NewtonError(RuntimeError):
    def __init__(self, message: str, lam: float, iters: int, residual_norm: float):
        super().__init__(message)
        self.lam = lam
        self.iters = iters
        self.residual_norm = residual_norm


class BranchError(NewtonError):
    """Continuation stopped early; ``partial`` holds the points that did converge."""

    def __init__(self, cause: NewtonError, partial: list):
        super().__init__(str(cause), cause.lam, cause.iters, cause.residual_norm)
        self.partial = partial


class SingularJacobianError(ArithmeticError):
    """sigma^2 nu_j sits (numerically) on s0, so the linearization is not invertible."""

    def __init__(self, message: str, j: int, mu_j: float):
        super().__init__(message)
        self.j = j
        self.mu_j = mu_j


@dataclass(frozen=True)
class BranchPoint:
    lam: float
    u: FilmProfile
    residual_norm: float
    newton_iters: int


@dataclass(frozen=True)
class DeflectionCertificate:
    sigma: float
    coeffs: np.ndarray
    C1: float
    C1_lower_bound: float
    s0: float = math.nan
    sigma_cyl: float = math.nan

    @property
    def holds(self) -> bool:
        return self.C1 > 0.0 and self.C1 >= self.C1_lower_bound

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma,
            "s0": self.s0,
            "sigma_cyl": self.sigma_cyl,
            "C1": self.C1,
            "C1_lower_bound": self.C1_lower_bound,
            "a_j": [float(a) for a in self.coeffs],
        }


@dataclass
class DeflectionReport:
    """Outcome of :func:`deflection_check`.

    ``forward_errors[eps]`` compares (u^{lambda_cyl+eps} - u^{lambda_cyl})/eps
    with the series (first order in eps), ``centered_errors[eps]`` the
    symmetric quotient over [lambda_cyl - eps, lambda_cyl + eps] (second
    order).  Both are relative discrete L2 errors.
    """

    ordered: bool
    symmetric: bool
    endpoint_slopes: bool
    max_asymmetry: float
    forward_errors: dict = dc_field(default_factory=dict)
    centered_errors: dict = dc_field(default_factory=dict)
    tol: float = 0.05

    @property
    def forward_order(self) -> float:
        """Observed order of the forward quotient from its two largest steps."""
        es = sorted(self.forward_errors)
        if len(es) < 2:
            return math.nan
        e1, e2 = es[-2], es[-1]
        return math.log(self.forward_errors[e2] / self.forward_errors[e1]) / math.log(e2 / e1)

    @property
    def passed(self) -> bool:
        return (self.ordered and self.symmetric and self.endpoint_slopes
                and bool(self.centered_errors)
                and all(e <= self.tol for e in self.centered_errors.values()))


def default_zgrid(n: int = DEFAULT_NZ) -> Grid1D:
    return z_grid(n)


def minimal_surface_term(u: FilmProfile, sigma: float) -> np.ndarray:
    """F(u) at interior nodes."""
    vals = u.values
    h = u.zgrid.h
    uz = first_difference(vals, h)[1:-1]
    return sigma**2 * second_difference(vals, h) / (1.0 + sigma**2 * uz**2) - 1.0 / (vals[1:-1] + 1.0)


def residual(u: FilmProfile, lam: float, sigma: float, rgrid: Optional[Grid1D] = None,
             zrefine: int = 1) -> ZFunction:
    """F(u) + lambda g(u) at interior nodes; 0 at z = +-1.

    lambda = 0 skips the field solve.
    """
    check_admissible(u.values)
    out = np.zeros(u.zgrid.size)
    out[1:-1] = minimal_surface_term(u, sigma)
    if lam != 0.0:
        out[1:-1] += lam * electrostatic_force(u, sigma, rgrid, zrefine).values[1:-1]
    return ZFunction(u.zgrid, out)


def jacobian(u: FilmProfile, lam: float, sigma: float, rgrid: Optional[Grid1D] = None,
             zrefine: int = 1, step: float = FD_STEP, base: Optional[np.ndarray] = None) -> np.ndarray:
    """Forward-difference Jacobian of the interior residual w.r.t. interior values.

    The step is halved for a column whose perturbation would leave S.
    """
    if base is None:
        base = residual(u, lam, sigma, rgrid, zrefine).interior
    interior = u.interior
    n = interior.size
    J = np.empty((n, n))
    for k in range(n):
        h = step
        while True:
            pert = interior.copy()
            pert[k] += h
            try:
                up = FilmProfile.from_interior(u.zgrid, pert)
                break
            except AdmissibilityError:
                h *= 0.5
                if h < 1e-14:
                    raise
        J[:, k] = (residual(up, lam, sigma, rgrid, zrefine).interior - base) / h
    return J


def check_nonsingular(sigma: float, j_check: int = J_CHECK, tol: float = SINGULAR_TOL,
                      grid: Optional[Grid1D] = None) -> None:
    """Raise :class:`SingularJacobianError` when some mu_j(sigma), j <= j_check, is ~0.

    A negative ``j_check`` disables the screen.
    """
    if j_check < 0:
        return
    spec = eigencurve.spectrum(sigma, j_check, grid)
    j = int(np.argmin(np.abs(spec.mus)))
    if abs(spec.mus[j]) < tol:
        raise SingularJacobianError(
            f"sigma = {sigma!r} is an excluded aspect ratio: mu_{j}(sigma) = {spec.mus[j]:.3e}",
            j, float(spec.mus[j]))


def newton_solve(lam: float, u0: FilmProfile, sigma: float, tol: float = NEWTON_TOL,
                 max_iters: int = 20, rgrid: Optional[Grid1D] = None, zrefine: int = 1,
                 j_check: int = J_CHECK) -> BranchPoint:
    """Newton's method for F(u) + lambda g(u) = 0 starting at ``u0``.

    Steps are halved while the update would leave S.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    check_nonsingular(sigma, j_check)
    zg = u0.zgrid
    u = u0
    R = residual(u, lam, sigma, rgrid, zrefine).interior
    norm = float(np.max(np.abs(R)))
    iters = 0
    while norm > tol:
        if iters >= max_iters:
            raise NewtonError(f"Newton did not converge at lambda = {lam!r} "
                              f"({iters} iterations, residual {norm:.3e})", lam, iters, norm)
        J = jacobian(u, lam, sigma, rgrid, zrefine, base=R)
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > 1e13:
            raise SingularJacobianError(f"Jacobian is near singular (cond {cond:.3e})", -1, math.nan)
        delta = np.linalg.solve(J, -R)
        t = 1.0
        while True:
            try:
                u = FilmProfile.from_interior(zg, u.interior + t * delta)
                break
            except AdmissibilityError as exc:
                t *= 0.5
                if t < 1e-6:
                    raise AdmissibilityError(f"Newton iterate leaves S at lambda = {lam!r}: {exc}",
                                             exc.kind, exc.node) from exc
        R = residual(u, lam, sigma, rgrid, zrefine).interior
        norm = float(np.max(np.abs(R)))
        iters += 1
    return BranchPoint(float(lam), u, norm, iters)


def lambda_grid(lambda_min: float, lambda_max: float, steps: int) -> np.ndarray:
    """``steps`` equispaced values with lambda_cyl inserted (or snapped onto) exactly."""
    if not lambda_min <= LAMBDA_CYL <= lambda_max:
        raise ValueError(f"lambda window [{lambda_min}, {lambda_max}] must contain "
                         f"lambda_cyl = {LAMBDA_CYL!r}")
    if steps < 1:
        raise ValueError("steps must be positive")
    lams = np.linspace(lambda_min, lambda_max, steps)
    k = int(np.argmin(np.abs(lams - LAMBDA_CYL)))
    if abs(lams[k] - LAMBDA_CYL) <= 1e-12 * max(1.0, abs(LAMBDA_CYL)):
        lams[k] = LAMBDA_CYL
    else:
        lams = np.sort(np.append(lams, LAMBDA_CYL))
    return lams


def continue_branch(lambda_min: float, lambda_max: float, steps: int, sigma: float,
                    zgrid: Optional[Grid1D] = None, tol: float = NEWTON_TOL, max_iters: int = 20,
                    rgrid: Optional[Grid1D] = None, zrefine: int = 1) -> list[BranchPoint]:
    """Natural continuation from (lambda_cyl, 0) outwards in both directions.

    Each solve is warm-started from its neighbour closer to lambda_cyl.
    Points are returned sorted by lambda.  If Newton fails (for instance past
    a fold of the branch) :class:`BranchError` is raised carrying every point
    that converged, from both directions.
    """
    zgrid = default_zgrid() if zgrid is None else zgrid
    lams = lambda_grid(lambda_min, lambda_max, steps)
    k0 = int(np.flatnonzero(lams == LAMBDA_CYL)[0])
    start = newton_solve(LAMBDA_CYL, FilmProfile.zero(zgrid), sigma, tol, max_iters, rgrid, zrefine)
    points = {k0: start}
    failure = None
    for order in (range(k0 + 1, lams.size), range(k0 - 1, -1, -1)):
        prev = start
        for k in order:
            try:
                prev = newton_solve(float(lams[k]), prev.u, sigma, tol, max_iters, rgrid, zrefine,
                                    j_check=-1)
            except NewtonError as exc:
                failure = failure or exc
                break
            points[k] = prev
    branch = [points[k] for k in sorted(points)]
    if failure is not None:
        raise BranchError(failure, branch)
    return branch


def ordering_violations(branch: Sequence[BranchPoint]) -> list[tuple[int, int]]:
    """(branch index, node) pairs where u^{lambda_k} < u^{lambda_{k+1}} fails."""
    bad = []
    for k in range(len(branch) - 1):
        lo, hi = branch[k], branch[k + 1]
        if not lo.lam < hi.lam:
            raise ValueError("branch must be sorted by strictly increasing lambda")
        nodes = np.flatnonzero(~(lo.u.interior < hi.u.interior))
        bad.extend((k, int(i) + 1) for i in nodes)
    return bad


def dlambda_u_at_cyl(sigma: float, J: int = DEFAULT_J, zgrid: Optional[Grid1D] = None,
                     grid: Optional[Grid1D] = None) -> tuple[ZFunction, DeflectionCertificate]:
    """d u / d lambda at the cylinder from its cosine series.

    du/dlambda = (4 / (pi ln(2)^2)) sum_{j<=J} a_j cos((2j+1) pi z / 2),
    a_j = (-1)^j / ((2j+1) (-mu_2j(sigma))).
    """
    th = eigencurve.threshold(grid)
    if sigma <= th.sigma_cyl:
        raise ValueError(f"sigma = {sigma!r} must exceed sigma_cyl = {th.sigma_cyl:.6g}")
    if J < 0:
        raise ValueError("J must be non-negative")
    zgrid = default_zgrid() if zgrid is None else zgrid
    j = np.arange(J + 1)
    mu_even = np.array([eigencurve.mu(sigma**2 * eigencurve.dirichlet_eigenvalue(2 * k), grid) for k in j])
    a = (-1.0) ** j / ((2 * j + 1) * -mu_even)
    f = cosine.OddCosineSum(a)
    C1, _ = cosine.positivity_bound(f)
    values = 4.0 / (math.pi * LAMBDA_CYL) * cosine.evaluate(f, zgrid.nodes)
    values[0] = values[-1] = 0.0
    cert = DeflectionCertificate(float(sigma), a, C1, 2.0 / (3.0 * math.pi**2 * sigma**2),
                                 th.s0, th.sigma_cyl)
    return ZFunction(zgrid, values), cert


def _find(branch: Sequence[BranchPoint], lam: float) -> Optional[BranchPoint]:
    for p in branch:
        if abs(p.lam - lam) <= 1e-9:
            return p
    return None


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def deflection_check(branch: Sequence[BranchPoint], sigma: float, eps: Iterable[float] = (1e-2, 5e-3),
                     J: int = DEFAULT_J, tol: float = 0.05, sym_tol: float = 1e-10) -> DeflectionReport:
    """Compare the branch against the series for du/dlambda and check its ordering.

    Difference quotients are formed for every ``eps`` whose branch points
    exist; the report passes when the centered quotients are within ``tol``.
    """
    branch = sorted(branch, key=lambda p: p.lam)
    ordered = not ordering_violations(branch)
    asym = max(float(np.max(np.abs(p.u.values - p.u.values[::-1]))) for p in branch)
    slopes = True
    for p in branch:
        if p.lam > LAMBDA_CYL:
            uz = first_difference(p.u.values, p.u.zgrid.h)
            slopes &= bool(uz[0] > 0.0 > uz[-1])
    report = DeflectionReport(ordered, asym <= sym_tol, slopes, asym, tol=tol)

    base = _find(branch, LAMBDA_CYL)
    if base is None:
        return report
    series, _ = dlambda_u_at_cyl(sigma, J, base.u.zgrid)
    for e in eps:
        up, down = _find(branch, LAMBDA_CYL + e), _find(branch, LAMBDA_CYL - e)
        if up is not None:
            report.forward_errors[e] = _rel_l2((up.u.values - base.u.values) / (up.lam - base.lam),
                                               series.values)
        if up is not None and down is not None:
            report.centered_errors[e] = _rel_l2((up.u.values - down.u.values) / (up.lam - down.lam),
                                                series.values)
    return report


def write_branch_csv(branch: Sequence[BranchPoint], out: TextIO) -> None:
    """Header: lambda, residual_norm, newton_iters, then the z nodes; one row per point."""
    if not branch:
        raise ValueError("empty branch")
    zg = branch[0].u.zgrid
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["lambda", "residual_norm", "newton_iters"] + [fmt_float(z) for z in zg.nodes])
    for p in branch:
        if p.u.zgrid != zg:
            raise ValueError("all branch points must share one z grid")
        writer.writerow([fmt_float(p.lam), fmt_float(p.residual_norm), p.newton_iters]
                        + [fmt_float(x) for x in p.u.values])


def read_branch_csv(src: TextIO) -> list[BranchPoint]:
    """Inverse of :func:`write_branch_csv`; lines starting with ``#`` are skipped."""
    rows = list(csv.reader(line for line in src if not line.startswith("#")))
    if not rows:
        raise ValueError("empty branch file")
    header = rows[0]
    if header[:3] != ["lambda", "residual_norm", "newton_iters"]:
        raise ValueError("not a branch file")
    nodes = np.array([float(x) for x in header[3:]])
    zg = z_grid(nodes.size - 2)
    if not np.array_equal(nodes, zg.nodes):
        raise ValueError("z nodes in header are not a uniform grid on [-1, 1]")
    points = []
    for row in rows[1:]:
        u = FilmProfile(zg, np.array([float(x) for x in row[3:]]))
        points.append(BranchPoint(float(row[0]), u, float(row[1]), int(row[2])))
    return points


def write_certificate_json(cert: DeflectionCertificate, out: TextIO) -> None:
    json.dump(cert.to_json(), out, indent=2)
    out.write("\n")
