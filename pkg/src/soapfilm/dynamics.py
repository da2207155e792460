"""Time integration of u_t = F(u) + lambda g(u) and measured growth/decay rates.

One IMEX Euler step freezes the quasilinear factor at the current state and
treats the diffusion implicitly:

    (I - dt K(u^n) D_zz) u^{n+1} = u^n + dt (R(u^n) - K(u^n) D_zz u^n),
    K(u) = sigma^2 / (1 + sigma^2 u_z^2),

where R is the stationary residual.  The field solve stays explicit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from typing import Optional, TextIO

import numpy as np
from scipy.linalg import solve_banded

from . import stationary
from .grid import (EVENT_MARGIN, AdmissibilityError, FilmProfile, Grid1D, ZFunction,
                   check_admissible, first_difference, fmt_float, second_difference)


@dataclass
class Trajectory:
    """States of one run.  ``event`` is set when the run stopped at an exit of S."""

    times: np.ndarray
    states: list
    sup_norms: np.ndarray
    state_steps: list = dc_field(default_factory=list)
    event: Optional[AdmissibilityError] = None
    event_time: Optional[float] = None
    meta: dict = dc_field(default_factory=dict)

    @property
    def final(self) -> FilmProfile:
        return self.states[-1]


def rhs_dyn(u: FilmProfile, lam: float, sigma: float, rgrid: Optional[Grid1D] = None,
            zrefine: int = 1) -> ZFunction:
    """Right-hand side of the evolution equation; equal to the stationary residual."""
    return stationary.residual(u, lam, sigma, rgrid, zrefine)


def step(u: FilmProfile, dt: float, lam: float, sigma: float, rgrid: Optional[Grid1D] = None,
         zrefine: int = 1) -> FilmProfile:
    """One semi-implicit Euler step.

    Raises :class:`AdmissibilityError` (kind ``"pinch-off"`` or ``"touch"``)
    when the new state comes within 1e-6 of u = -1 or u = 1.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    vals = u.values
    h = u.zgrid.h
    n = u.zgrid.n
    uz = first_difference(vals, h)[1:-1]
    k = sigma**2 / (1.0 + sigma**2 * uz**2)
    explicit = rhs_dyn(u, lam, sigma, rgrid, zrefine).interior - k * second_difference(vals, h)
    c = dt * k / h**2
    ab = np.zeros((3, n))
    ab[0, 1:] = -c[:-1]
    ab[1] = 1.0 + 2.0 * c
    ab[2, :-1] = -c[1:]
    new = np.zeros(u.zgrid.size)
    new[1:-1] = solve_banded((1, 1), ab, vals[1:-1] + dt * explicit, check_finite=False)
    check_admissible(new, EVENT_MARGIN)
    return FilmProfile(u.zgrid, new)


def evolve(u0: FilmProfile, T: float, dt: float, lam: float, sigma: float,
           u_ref: Optional[FilmProfile] = None, rgrid: Optional[Grid1D] = None,
           zrefine: int = 1, keep_states: int = 1) -> Trajectory:
    """Integrate up to time ``T`` or until the film leaves S.

    Every step records ``sup |u - u_ref|``; states are kept every
    ``keep_states`` steps (``0`` keeps only the first and last).  An exit of
    S ends the run and is stored in ``event`` rather than raised.
    """
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    check_admissible(u0.values)
    ref = np.zeros(u0.zgrid.size) if u_ref is None else u_ref.values
    nsteps = int(round(T / dt))
    times = [0.0]
    norms = [float(np.max(np.abs(u0.values - ref)))]
    states = [u0]
    steps = [0]
    u = u0
    event = event_time = None
    for i in range(1, nsteps + 1):
        try:
            u = step(u, dt, lam, sigma, rgrid, zrefine)
        except AdmissibilityError as exc:
            event, event_time = exc, i * dt
            break
        times.append(i * dt)
        norms.append(float(np.max(np.abs(u.values - ref))))
        if keep_states and i % keep_states == 0:
            states.append(u)
            steps.append(i)
    if states[-1] is not u:
        states.append(u)
        steps.append(len(times) - 1)
    return Trajectory(np.array(times), states, np.array(norms), steps, event, event_time,
                      {"dt": dt, "lambda": lam, "sigma": sigma})


def measured_rate(traj: Trajectory, window: tuple[float, float]) -> float:
    """Least-squares slope of log(sup_norm) against t over ``window``."""
    t0, t1 = window
    if not t0 < t1:
        raise ValueError("window must satisfy t0 < t1")
    if t0 < traj.times[0] or t1 > traj.times[-1] + 1e-12:
        raise ValueError(f"window {window} outside the trajectory [{traj.times[0]}, {traj.times[-1]}]")
    mask = (traj.times >= t0 - 1e-12) & (traj.times <= t1 + 1e-12)
    if mask.sum() < 2:
        raise ValueError("window contains fewer than two samples")
    norms = traj.sup_norms[mask]
    if np.any(norms <= 0.0):
        raise ValueError("sup norms must be positive on the window")
    slope, _ = np.polyfit(traj.times[mask], np.log(norms), 1)
    return float(slope)


def write_trajectory_csv(traj: Trajectory, out: TextIO, snapshot_stride: int = 0) -> None:
    """Rows ``t, sup_norm``.

    With ``snapshot_stride > 0`` the stored state of every stride-th step is
    appended as extra columns (left empty on the other rows).
    """
    writer = csv.writer(out, lineterminator="\n")
    size = traj.states[0].zgrid.size
    header = ["t", "sup_norm"]
    snaps = {}
    if snapshot_stride > 0:
        snaps = {i: s for i, s in zip(traj.state_steps, traj.states) if i % snapshot_stride == 0}
        header += [f"u({fmt_float(z)})" for z in traj.states[0].zgrid.nodes]
    writer.writerow(header)
    for i, (t, norm) in enumerate(zip(traj.times, traj.sup_norms)):
        row = [fmt_float(t), fmt_float(norm)]
        if snapshot_stride > 0:
            row += [fmt_float(x) for x in snaps[i].values] if i in snaps else [""] * size
        writer.writerow(row)
