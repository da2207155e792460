"""Command-line front end.

    soapfilm eigencurve | threshold | spectrum | branch | evolve | deflection | selftest

Settings come from a JSON config (``--config``) whose keys are the fields of
:class:`RunConfig`; command-line flags override it.  Exit status is 0 on
success, 1 on invalid input and 2 when a computation fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cosine, dynamics, eigencurve, field, radial, stationary
from .grid import LAMBDA_CYL, SIGMA_CRIT, AdmissibilityError, FilmProfile, fmt_float

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # grids
    radial_n: int = radial.PRODUCTION_N
    z_n: int = stationary.DEFAULT_NZ
    field_nr: int = field.DEFAULT_NR
    field_zrefine: int = 1
    # tolerances
    newton_tol: float = stationary.NEWTON_TOL
    root_tol: float = 1e-8
    linear_tol: float = field.LINEAR_RTOL
    # truncations
    K: int = 200
    J: int = stationary.DEFAULT_J
    spectrum_modes: int = 8
    # eigencurve samples
    s_min: float = 0.0
    s_max: float = 10.0
    s_points: int = 101
    # physics
    sigma: float = 1.6
    lambda_min: float = LAMBDA_CYL - 0.02
    lambda_max: float = LAMBDA_CYL + 0.02
    steps: int = 9
    newton_max_iters: int = 20
    # dynamics
    lam: float = LAMBDA_CYL
    dt: float = 1e-3
    T: float = 3.0
    seed_amplitude: float = 1e-3
    seed_mode: int = 0
    rate_window: tuple = (0.5, 3.0)
    snapshot_stride: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        if isinstance(cfg.rate_window, list):
            cfg.rate_window = tuple(cfg.rate_window)
        return cfg

    def validate(self, needs_window: bool = False) -> None:
        for name in ("radial_n", "z_n", "field_nr", "field_zrefine", "K", "J", "s_points",
                     "steps", "newton_max_iters"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.spectrum_modes < 0 or self.seed_mode < 0 or self.snapshot_stride < 0:
            raise ConfigError("spectrum_modes, seed_mode and snapshot_stride must be non-negative")
        for name in ("newton_tol", "root_tol", "linear_tol", "sigma", "dt", "T"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.s_max < self.s_min:
            raise ConfigError("s_max must not be below s_min")
        if len(self.rate_window) != 2 or not self.rate_window[0] < self.rate_window[1]:
            raise ConfigError("rate_window must be an increasing pair")
        if self.radial_n < 10 * self.K:
            raise ConfigError(f"radial_n = {self.radial_n} is too small for K = {self.K} modes")
        if needs_window and not self.lambda_min <= LAMBDA_CYL <= self.lambda_max:
            raise ConfigError(f"lambda window [{self.lambda_min}, {self.lambda_max}] must contain "
                              f"lambda_cyl = {LAMBDA_CYL!r}")

    # derived objects
    def radial_grid(self):
        return radial.radial_grid(self.radial_n)

    def zgrid(self):
        return stationary.default_zgrid(self.z_n)

    def rgrid(self):
        return field.default_rgrid(self.field_nr)


# ---------------------------------------------------------------- commands

def cmd_eigencurve(cfg: RunConfig, out, fmt: str) -> int:
    s_values = np.linspace(cfg.s_min, cfg.s_max, cfg.s_points)
    samples = eigencurve.eigencurve_samples(s_values, cfg.radial_grid())
    if fmt == "json":
        json.dump({"s": [r.s for r in samples], "mu": [r.mu for r in samples],
                   "mu_prime": [r.mu_prime for r in samples]}, out, indent=2)
        out.write("\n")
    else:
        eigencurve.write_eigencurve_csv(samples, out)
    return EXIT_OK


def _threshold_report(cfg: RunConfig) -> dict:
    th = eigencurve.find_s0(tol=cfg.root_tol, grid=cfg.radial_grid())
    return {
        "s0": th.s0,
        "sigma_cyl": th.sigma_cyl,
        "sigma_crit": SIGMA_CRIT,
        "comparison": "sigma_cyl < sigma_crit" if th.sigma_cyl < SIGMA_CRIT else "sigma_cyl >= sigma_crit",
        "residual": th.residual,
        "bracket": list(th.bracket),
    }


def cmd_threshold(cfg: RunConfig, out, fmt: str) -> int:
    report = _threshold_report(cfg)
    if fmt == "csv":
        keys = ["s0", "sigma_cyl", "sigma_crit", "comparison", "residual"]
        out.write(",".join(keys) + "\n")
        out.write(",".join(v if isinstance(v, str) else fmt_float(v)
                           for v in (report[k] for k in keys)) + "\n")
    else:
        json.dump(report, out, indent=2)
        out.write("\n")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out, fmt: str) -> int:
    grid = cfg.radial_grid()
    spec = eigencurve.spectrum(cfg.sigma, cfg.spectrum_modes, grid)
    sigma_cyl = eigencurve.find_s0(tol=cfg.root_tol, grid=grid).sigma_cyl
    with_bounds = cfg.sigma > sigma_cyl
    rows = []
    for j, (nu, m) in enumerate(zip(spec.nu, spec.mus)):
        row = {"j": j, "nu": float(nu), "mu": float(m)}
        if with_bounds:
            row["lower"], row["upper"] = eigencurve.mode_bounds(cfg.sigma, j, sigma_cyl)
        rows.append(row)
    if fmt == "json":
        json.dump({"sigma": cfg.sigma, "sigma_cyl": sigma_cyl, "modes": rows}, out, indent=2)
        out.write("\n")
        return EXIT_OK
    keys = ["j", "nu", "mu"] + (["lower", "upper"] if with_bounds else [])
    out.write(",".join(keys) + "\n")
    for row in rows:
        out.write(",".join(str(row[k]) if k == "j" else fmt_float(row[k]) for k in keys) + "\n")
    return EXIT_OK


def _run_branch(cfg: RunConfig):
    """(branch, error) where ``error`` is the Newton failure that cut it short, if any."""
    try:
        branch = stationary.continue_branch(
            cfg.lambda_min, cfg.lambda_max, cfg.steps, cfg.sigma, cfg.zgrid(), cfg.newton_tol,
            cfg.newton_max_iters, cfg.rgrid(), cfg.field_zrefine)
        return branch, None
    except stationary.BranchError as exc:
        return exc.partial, exc


def _certificate(cfg: RunConfig) -> Optional[stationary.DeflectionCertificate]:
    th = eigencurve.threshold(cfg.radial_grid())
    if cfg.sigma <= th.sigma_cyl:
        return None
    _, cert = stationary.dlambda_u_at_cyl(cfg.sigma, cfg.J, cfg.zgrid(), cfg.radial_grid())
    return cert


def _branch_json(branch) -> dict:
    return {
        "z": branch[0].u.zgrid.nodes.tolist() if branch else [],
        "points": [{"lambda": p.lam, "residual_norm": p.residual_norm,
                    "newton_iters": p.newton_iters, "u": p.u.values.tolist()} for p in branch],
    }


def cmd_branch(cfg: RunConfig, out, fmt: str, out_path: Optional[str] = None) -> int:
    stationary.check_nonsingular(cfg.sigma, grid=cfg.radial_grid())
    branch, error = _run_branch(cfg)
    cert = _certificate(cfg)
    cert_json = cert.to_json() if cert is not None else None
    if fmt == "json":
        doc = _branch_json(branch)
        doc["certificate"] = cert_json
        doc["complete"] = error is None
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        stationary.write_branch_csv(branch, out)
        if out_path is not None:
            with open(_sibling(out_path, ".certificate.json"), "w") as fh:
                json.dump(cert_json, fh, indent=2)
                fh.write("\n")
        else:
            out.write("# " + json.dumps({"certificate": cert_json}) + "\n")
    if error is not None:
        print(f"error: branch incomplete: {error}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_deflection(cfg: RunConfig, out, fmt: str) -> int:
    stationary.check_nonsingular(cfg.sigma, grid=cfg.radial_grid())
    branch, error = _run_branch(cfg)
    report = stationary.deflection_check(branch, cfg.sigma, J=cfg.J)
    cert = _certificate(cfg)
    doc = {
        "sigma": cfg.sigma,
        "branch_complete": error is None,
        "lambda_range": [branch[0].lam, branch[-1].lam],
        "ordered": report.ordered,
        "symmetric": report.symmetric,
        "max_asymmetry": report.max_asymmetry,
        "endpoint_slopes": report.endpoint_slopes,
        "forward_errors": {fmt_float(k): v for k, v in report.forward_errors.items()},
        "forward_order": report.forward_order,
        "centered_errors": {fmt_float(k): v for k, v in report.centered_errors.items()},
        "passed": report.passed,
        "certificate": cert.to_json() if cert is not None else None,
    }
    if error is not None:
        doc["error"] = str(error)
    json.dump(doc, out, indent=2)
    out.write("\n")
    return EXIT_OK if error is None and report.passed else EXIT_FAILED


def cmd_evolve(cfg: RunConfig, out, fmt: str) -> int:
    zg = cfg.zgrid()
    seed = cfg.seed_amplitude * eigencurve.dirichlet_mode(cfg.seed_mode, zg.nodes)
    u0 = FilmProfile(zg, seed)
    keep = cfg.snapshot_stride if cfg.snapshot_stride > 0 else 0
    traj = dynamics.evolve(u0, cfg.T, cfg.dt, cfg.lam, cfg.sigma, rgrid=cfg.rgrid(),
                           zrefine=cfg.field_zrefine, keep_states=keep)
    t0, t1 = cfg.rate_window
    t1 = min(t1, float(traj.times[-1]))
    rate = dynamics.measured_rate(traj, (t0, t1)) if t0 < t1 else math.nan
    trailer = {
        "measured_rate": rate,
        "rate_window": [t0, t1],
        "event": traj.event.kind if traj.event is not None else None,
        "event_node": traj.event.node if traj.event is not None else None,
        "event_time": traj.event_time,
    }
    if cfg.lam == LAMBDA_CYL:
        trailer["mu_seed_mode"] = eigencurve.mu(cfg.sigma**2 * eigencurve.dirichlet_eigenvalue(cfg.seed_mode),
                                                cfg.radial_grid())
    if fmt == "json":
        json.dump({"t": traj.times.tolist(), "sup_norm": traj.sup_norms.tolist(), **trailer}, out, indent=2)
        out.write("\n")
    else:
        dynamics.write_trajectory_csv(traj, out, cfg.snapshot_stride)
        out.write("# " + json.dumps(trailer) + "\n")
    if traj.event is not None:
        print(f"event: {traj.event.kind} at node {traj.event.node}, t = {traj.event_time:.6g}",
              file=sys.stderr)
    return EXIT_OK


def selftest_checks(cfg: RunConfig) -> list[dict]:
    """The closed-form checks, each as a dict with value, expected and verdict."""
    grid = cfg.radial_grid()
    checks = []

    def add(name, value, expected, tol):
        err = abs(value - expected)
        checks.append({"name": name, "value": value, "expected": expected, "error": err,
                       "tol": tol, "passed": bool(err <= tol)})

    ln2 = math.log(2.0)
    add("lambda_cyl", LAMBDA_CYL, ln2 * ln2, 0.0)
    add("mu(0)", eigencurve.mu(0.0, grid), eigencurve.MU_0, 1e-6)
    add("mu'(0)", eigencurve.mu_prime(0.0, grid), eigencurve.MU_PRIME_0, 1e-6)
    h0 = radial.solve_h(0.0, grid)
    add("dh0(1)", radial.boundary_flux(h0), eigencurve.DH0_AT_1, 1e-6)
    add("dp0(1)", radial.boundary_flux(radial.solve_p(0.0, h0)), eigencurve.DP0_AT_1, 1e-6)
    zg, rg = field.z_grid(127), field.default_rgrid(63)
    g0 = field.electrostatic_force(FilmProfile.zero(zg), cfg.sigma, rg).values
    checks.append({"name": "g(0)", "value": float(g0[len(g0) // 2]), "expected": 1.0 / ln2**2,
                   "error": float(np.max(np.abs(g0 - 1.0 / ln2**2))), "tol": 1e-4})
    checks[-1]["passed"] = bool(checks[-1]["error"] <= 1e-4)
    n = 10**6
    j = np.arange(1, n + 1, dtype=float)
    add("tail sum 1/4", float(np.sum(1.0 / ((2 * j + 1) ** 2 - 1))), 0.25, 1e-6)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        f = cosine.OddCosineSum(rng.uniform(-1, 1, rng.integers(1, 33)))
        z = rng.uniform(-1, 1, 100)
        lhs = cosine.evaluate(f, z)
        rhs = np.cos(np.pi * z / 2) * cosine.even_cosine_series(cosine.odd_to_even(f), z)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    checks.append({"name": "cosine odd-to-even", "value": worst, "expected": 0.0, "error": worst,
                   "tol": 1e-12, "passed": worst <= 1e-12})
    return checks


def cmd_selftest(cfg: RunConfig, out, fmt: str) -> int:
    start = time.perf_counter()
    checks = selftest_checks(cfg)
    ok = all(c["passed"] for c in checks)
    json.dump({"checks": checks, "passed": ok, "elapsed_s": time.perf_counter() - start}, out, indent=2)
    out.write("\n")
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "eigencurve": (cmd_eigencurve, "csv", "mu(s) and mu'(s) on an s grid"),
    "threshold": (cmd_threshold, "json", "zero s0 of mu and sigma_cyl"),
    "spectrum": (cmd_spectrum, "csv", "eigenvalues mu_j(sigma) of the linearization at the cylinder"),
    "branch": (cmd_branch, "csv", "stationary branch by continuation in lambda"),
    "evolve": (cmd_evolve, "csv", "time integration and measured rate"),
    "deflection": (cmd_deflection, "json", "branch against the du/dlambda series"),
    "selftest": (cmd_selftest, "json", "closed-form checks"),
}


def _sibling(path: str, suffix: str) -> str:
    return path[:-4] + suffix if path.endswith(".csv") else path + suffix


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soapfilm", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, default_fmt, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON file with RunConfig fields")
        p.add_argument("--sigma", type=float)
        p.add_argument("--lambda-min", type=float, dest="lambda_min")
        p.add_argument("--lambda-max", type=float, dest="lambda_max")
        p.add_argument("--steps", type=int)
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=default_fmt)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("sigma", "lambda_min", "lambda_max", "steps"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


COMPUTE_ERRORS = (
    ArithmeticError,  # singular systems, failed linear solves
    RuntimeError,  # Newton and root-finding failures
    AdmissibilityError,
)


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    func, _, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args)
        cfg.validate(needs_window=args.command in ("branch", "deflection"))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    field.LINEAR_RTOL = cfg.linear_tol

    buf = io.StringIO()
    kwargs = {"out_path": args.out} if args.command == "branch" else {}
    try:
        status = func(cfg, buf, args.format, **kwargs)
    except COMPUTE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
