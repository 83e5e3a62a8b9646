"""Command-line entry point: ``dilute-bose <subcommand> [options]``.

Exit status is 0 when every check of the subcommand passes, 1 when a check
fails (the first failing invariant is named on stderr) and 2 for bad input.
Every run writes its tables as CSV plus a ``manifest.json`` listing inputs,
seed, versions, tolerances and a SHA-256 for each output file.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
from collections import Counter
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bridge as br
from .config import (ConfigError, load_config, load_potential, parse_grid, parse_occupation, parse_pairs,
                     section, tolerances_from)
from .errors import ConstructionError, DomainError, InvalidPotentialError, QuadratureError, SizeError
from .excitations import (HIGH, SHELL_NAMES, build_boxes, build_shells, energy_components, generate_family,
                          high_occupation_bound, lattice_w, n_alpha, q_statistics)
from .fock import MomentumLattice, OccupationState, build_hamiltonian, exact_free_energy
from .gibbs import build_ensemble, build_gamma0, reduced_density, variational_report
from .potentials import FOUR_PI, fourier_hat
from .scattering import solve_zero_energy, w_fourier, w_norms
from .thermo import (TemperatureSchedule, chemical_potential, critical_density, delta_f_leading,
                     free_energy_density, thermo_point)
from .verify import SUITES, run_all

INPUT_ERRORS = (ConfigError, DomainError, SizeError, InvalidPotentialError, QuadratureError, ConstructionError)


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


class Run:
    """Output directory, manifest bookkeeping and check tracking for one invocation."""

    def __init__(self, args: argparse.Namespace, data: dict, argv: Sequence[str]):
        self.args = args
        self.data = data
        self.argv = list(argv)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = int(args.seed if args.seed is not None else data.get("seed", 0))
        self.quiet = bool(args.quiet)
        self.figures = bool(args.figures)
        self.tol = tolerances_from(data, parse_pairs(args.tol, "--tol") if args.tol else None)
        self.base = data.get("_base", ".")
        self.outputs: list[Path] = []
        self.failures: list[str] = []
        self.params: dict[str, Any] = {}

    def say(self, text: str) -> None:
        if not self.quiet:
            print(text)

    def table(self, rows: Sequence[tuple[str, Any]]) -> None:
        width = max((len(k) for k, _ in rows), default=0)
        for k, v in rows:
            self.say(f"{k:<{width}}  {_fmt(v)}")

    def write_csv(self, name: str, header: Sequence[str], rows) -> Path:
        path = self.out / name
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for row in rows:
                wr.writerow([_fmt(v) for v in row])
        self.outputs.append(path)
        return path

    def figure(self, name: str, render, *payload) -> None:
        if self.figures:
            self.outputs.append(render(*payload, self.out / name))

    def check(self, name: str, ok: bool) -> None:
        if not ok:
            self.failures.append(name)

    def potential(self):
        src = getattr(self.args, "potential", None)
        if src is not None:
            return load_potential(src)
        return load_potential(self.data.get("potential"), self.base)

    def finish(self) -> int:
        status = 1 if self.failures else 0
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "config": self.args.config,
            "config_sha256": _sha(Path(self.args.config)) if self.args.config else None,
            "parameters": {k: _jsonable(v) for k, v in self.params.items()},
            "seed": self.seed,
            "versions": _versions(),
            "tolerances": self.tol.as_dict(),
            "outputs": [{"file": p.name, "sha256": _sha(p)} for p in self.outputs],
            "status": status,
            "first_failure": self.failures[0] if self.failures else None,
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if self.failures:
            print(f"check failed: {self.failures[0]}", file=sys.stderr)
        return status


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _versions() -> dict[str, str]:
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for pkg in ("scipy", "mpmath", "matplotlib", "pyyaml", "dilute-bose"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def _lattice(shape: str, L: float, cutoff: int) -> MomentumLattice:
    if shape == "cube":
        return MomentumLattice.cube(L, cutoff)
    if shape == "ball":
        return MomentumLattice.ball(L, cutoff * cutoff)
    if shape == "line":
        return MomentumLattice.line(L, cutoff)
    raise ConfigError(f"unknown lattice shape '{shape}' (cube, ball or line)")


# --- subcommands ----------------------------------------------------------------

def cmd_scattering(run: Run) -> None:
    opt = section(run.data, "scattering", vars(run.args))
    run.params.update(opt)
    pot = run.potential()
    r_max = float(opt["rmax"])
    if r_max <= pot.range:
        raise ConfigError(f"rmax={r_max} must exceed the potential range {pot.range}")
    sol = solve_zero_energy(pot, r_max, float(opt["step"]))
    nrm = w_norms(sol)
    r1, r2 = nrm.identity_residuals(sol.a)
    run.table([("potential", pot.name), ("a", sol.a), ("grad_w_sq", nrm.grad_sq), ("half_Vw_L1", nrm.half_vw),
               ("half_Vw2_L1", nrm.half_vw2), ("half_Vhat0", nrm.half_v0), ("gradient_identity_residual", r1),
               ("scattering_identity_residual", r2), ("ode_step_residual", sol.residual)])
    r, w = sol.profile()
    run.write_csv("w_profile.csv", ["r", "w"], zip(r, w))
    n = int(opt["npoints"])
    p = float(opt["pmax"]) * np.arange(1, n + 1) / n
    wp = w_fourier(sol, p)
    run.write_csv("w_fourier.csv", ["p", "w_p", "bound"], zip(p, wp, FOUR_PI * sol.a / p ** 2))
    if not pot.is_zero:
        run.check("gradient identity", abs(r1) <= run.tol.norm_identity_rel * nrm.grad_sq)
        run.check("scattering identity", abs(r2) <= run.tol.norm_identity_rel * FOUR_PI * sol.a)
    run.check("|w_p| <= 4 pi a / p^2", bool(np.all(np.abs(wp) * p ** 2 <= FOUR_PI * sol.a * (1 + 1e-12))))
    from .plotting import scattering_figure
    run.figure("scattering.png", scattering_figure, r, w, p, wp, sol.a)


def cmd_thermo(run: Run) -> None:
    opt = section(run.data, "thermo", vars(run.args))
    run.params.update(opt)
    tp = thermo_point(float(opt["rho"]), float(opt["beta"]), opt["method"])
    rows = [("rho", tp.rho), ("beta", tp.beta), ("mu", tp.mu), ("rho_c", tp.rho_c), ("f0", tp.f0),
            ("regime", tp.regime)]
    run.table(rows)
    run.write_csv("thermo.csv", [k for k, _ in rows], [[v for _, v in rows]])
    run.check("mu <= 0", tp.mu <= 0.0)


def cmd_delta_f(run: Run) -> None:
    opt = section(run.data, "delta-f", vars(run.args))
    run.params.update(opt)
    sched_spec = parse_pairs(opt["schedule"], "--schedule")
    if set(sched_spec) != {"c"}:
        raise ConfigError("--schedule expects c=<value>")
    sched = TemperatureSchedule(sched_spec["c"])
    pot = run.potential()
    a = solve_zero_energy(pot, 3.0 * pot.range).a
    rows = []
    for rho in parse_grid(opt["rho_grid"]):
        beta = sched.beta(rho)
        rc = critical_density(beta)
        rows.append((rho, beta, rc, rc / rho, free_energy_density(rho, beta), delta_f_leading(a, rho, rc)))
    run.say(f"a = {_fmt(a)}")
    for row in rows:
        run.say("  ".join(_fmt(v) for v in row))
    run.write_csv("delta_f.csv", ["rho", "beta", "rho_c", "R", "f0", "delta_f"], rows)
    ratios = [row[5] / row[0] ** 2 for row in rows]
    run.check("delta_f / rho^2 constant along the schedule",
              max(ratios) - min(ratios) <= 1e-12 * max(abs(x) for x in ratios) if ratios else True)
    from .plotting import delta_f_figure
    run.figure("delta_f.png", delta_f_figure, [r[0] for r in rows], [r[5] for r in rows], a)


def cmd_fock(run: Run) -> None:
    opt = section(run.data, "fock", vars(run.args))
    run.params.update(opt)
    lat = _lattice(opt["shape"], float(opt["L"]), int(opt["cutoff"]))
    pot = run.potential()
    H = build_hamiltonian(lat, int(opt["N"]), lambda p: fourier_hat(pot, p), guard=run.tol.basis_guard)
    res = exact_free_energy(H, float(opt["beta"]), guard=run.tol.dense_guard)
    herm, sect = H.hermiticity_defect(), H.sector_violation()
    sectors = Counter(s.total_momentum(lat) for s in H.basis)
    run.table([("modes", lat.n_modes), ("N", int(opt["N"])), ("dimension", H.dim), ("sectors", len(sectors)),
               ("free_energy", res.free_energy), ("ground_energy", float(res.energies[0])),
               ("hermiticity_defect", herm), ("sector_violation", sect)])
    run.write_csv("fock_sectors.csv", ["px", "py", "pz", "dimension"], [(*k, v) for k, v in sorted(sectors.items())])
    run.write_csv("fock_spectrum.csv", ["index", "energy", "gibbs_weight"],
                  zip(range(H.dim), res.energies, res.weights))
    if opt["dump"]:
        coo = H.matrix.tocoo()
        run.write_csv("fock_matrix.csv", ["row", "col", "re", "im"],
                      sorted(zip(coo.row, coo.col, np.real(coo.data), np.imag(coo.data))))
    run.check("hermiticity", herm <= run.tol.hermitian)
    run.check("momentum sectors", sect == 0.0)


def _trial_setup(run: Run, opt: dict):
    lat = _lattice(opt["shape"], float(opt["L"]), int(opt["cutoff"]))
    pot = run.potential()
    sol = solve_zero_energy(pot, 3.0 * pot.range)
    shell_spec = parse_pairs(opt["shells"], "--shells")
    rho = opt.get("rho")
    return lat, pot, sol, shell_spec, rho


def cmd_trial_state(run: Run) -> None:
    opt = section(run.data, "trial-state", vars(run.args))
    run.params.update(opt)
    lat, pot, sol, shell_spec, rho = _trial_setup(run, opt)
    sh = build_shells(lat, float(rho), shell_spec)
    alpha = OccupationState.from_mapping(lat, parse_occupation(opt["alpha"]))
    side = int(opt["box_side"])
    fam = generate_family(alpha, sh, build_boxes(sh, side, side), lattice_w(lat, lambda p: w_fourier(sol, p)),
                          guard=run.tol.family_guard)
    rep = energy_components(fam, lambda p: fourier_hat(pot, p), w_norms(sol), sol.a)
    run.table([("family_size", fam.size), ("N_alpha", n_alpha(alpha, sh)), ("normalization_defect",
               fam.normalization_defect()), ("E_psi", rep.total_psi), ("E_alpha", rep.total_alpha),
               ("gap", rep.gap), ("predicted_gap", rep.predicted_gap)])
    labels = sh.labels()
    qrows = []
    for k in range(lat.n_modes):
        q = q_statistics(fam, k)
        bound = high_occupation_bound(fam, k) if labels[k] == HIGH else float("nan")
        qrows.append((*lat.modes[k], SHELL_NAMES[int(labels[k])], q, bound))
    run.write_csv("trial_Q.csv", ["n1", "n2", "n3", "shell", "Q", "high_bound"], qrows)
    run.write_csv("trial_energy.csv", ["component", "psi", "alpha", "main", "residual"],
                  [(ln.name, ln.psi, ln.alpha, ln.main, ln.residual) for ln in rep.lines])
    for ln in rep.lines:
        run.say(f"  {ln.name:<8} psi={_fmt(ln.psi)} alpha={_fmt(ln.alpha)} main={_fmt(ln.main)}")
    run.check("family normalization", fam.normalization_defect() <= run.tol.normalization)


def cmd_upper_bound(run: Run) -> None:
    opt = section(run.data, "upper-bound", vars(run.args))
    run.params.update(opt)
    lat, pot, sol, shell_spec, rho = _trial_setup(run, opt)
    N = int(opt["N"])
    vol = lat.volume
    rho = N / vol if rho is None else float(rho)
    sh = build_shells(lat, rho, shell_spec)
    side = int(opt["box_side"])
    boxes = build_boxes(sh, side, side)
    w = lattice_w(lat, lambda p: w_fourier(sol, p))
    H = build_hamiltonian(lat, N, lambda p: fourier_hat(pot, p), guard=run.tol.basis_guard)
    header = ["beta", "mu", "m0", "F_exact", "F_var_gamma0", "F_var_gamma", "F_bound_gamma", "S0", "A_rowsum",
              "S_exact", "f0_volume", "delta_f_volume", "excess_residual"]
    rows = []
    for beta in parse_grid(opt["beta"]):
        if opt["mu"] is not None:
            mu = float(opt["mu"])
        else:
            mu = chemical_potential(reduced_density(rho, lat.L), beta) if lat.L > 1 else 0.0
        res = exact_free_energy(H, beta, guard=run.tol.dense_guard)
        rc = critical_density(beta)
        g0 = build_gamma0(build_ensemble(sh, beta, mu), N, sh, seed=run.seed, target=min(rho, rc) * vol,
                          n_samples=int(opt["samples"]))
        gamma = g0.mixture.with_families(sh, boxes, w)
        f0 = free_energy_density(rho, beta)
        df = delta_f_leading(sol.a, rho, rc)
        r0 = variational_report(g0.mixture, H, beta, f0, df, exact=res)
        r1 = variational_report(gamma, H, beta, f0, df, exact=res)
        rows.append((beta, mu, g0.sector, res.free_energy, r0.f_var, r1.f_var, r1.f_var_bound, r1.entropy.s0,
                     r1.entropy.a_bound, r1.entropy.exact, f0 * vol, df * vol, r1.excess))
        run.check(f"variational inequality (Gamma0, beta={_fmt(beta)})", r0.holds)
        run.check(f"variational inequality (Gamma, beta={_fmt(beta)})", r1.holds)
        run.check(f"entropy bound (beta={_fmt(beta)})", r1.entropy.holds)
    for row in rows:
        run.table(list(zip(header, row)))
        run.say("")
    run.write_csv("upper_bound.csv", header, rows)
    from .plotting import sweep_figure
    run.figure("upper_bound.png", sweep_figure, [r[0] for r in rows], [r[5] for r in rows], [r[3] for r in rows])


def _corpus(spec: str, seed: int) -> list[tuple[str, br.TrigPolynomial]]:
    out = [("constant", br.TrigPolynomial.from_mapping({(0, 0, 0): 1.0})),
           ("plane_wave", br.TrigPolynomial.from_mapping({(1, 0, 0): 1.0}))]
    for item in str(spec).split(","):
        item = item.strip()
        if not item or item == "basic":
            continue
        parts = item.split(":")
        if parts[0] != "random" or len(parts) != 3:
            raise ConfigError(f"bad corpus entry '{item}' (expected basic or random:<count>:<degree>)")
        count, degree = int(parts[1]), int(parts[2])
        out += [(f"random{j}", br.TrigPolynomial.random(degree, 2 * degree + 2, seed + j)) for j in range(count)]
    return out


def cmd_bridge(run: Run) -> None:
    opt = section(run.data, "bridge", vars(run.args))
    run.params.update(opt)
    prof = br.BridgeProfile(float(opt["L"]), float(opt["ell"]))
    rows = []
    for name, phi in _corpus(opt["corpus"], run.seed):
        iso = br.isometry_check(prof, phi)
        pen = br.kinetic_penalty(prof, phi)
        rows.append((name, phi.degree, iso.norm_in, iso.norm_out, iso.defect, pen.lhs, pen.gradient,
                     pen.boundary_mass, pen.needed_constant, pen.margin))
        run.check(f"isometry ({name})", iso.defect <= run.tol.isometry)
        run.check(f"kinetic penalty ({name})", pen.margin >= -1e-12 * max(pen.rhs, 1.0))
    header = ["phi", "degree", "norm_in", "norm_out", "isometry_defect", "grad_h_phi_sq", "grad_phi_sq",
              "boundary_mass", "needed_constant", "margin"]
    run.say(f"reported constant C = 3 pi^2 / 16 = {_fmt(br.PENALTY_CONSTANT)}")
    for row in rows:
        run.say("  ".join(_fmt(v) for v in row))
    run.write_csv("bridge.csv", header, rows)
    x = np.linspace(-prof.ell, prof.L + prof.ell, 801)
    run.write_csv("bridge_profile.csv", ["x", "q", "dq"], zip(x, prof.q(x), prof.dq(x)))
    from .plotting import bridge_figure
    run.figure("bridge_profile.png", bridge_figure, x, prof.q(x), prof.dq(x))


def cmd_verify(run: Run) -> None:
    quick = bool(run.args.quick) or bool(run.data.get("verify", {}).get("quick", False))
    run.params["quick"] = quick
    checks = run_all(quick=quick, seed=run.seed, tol=run.tol)
    stable = [c for c in checks if c.name != "runtime_seconds"]
    timing = [c for c in checks if c.name == "runtime_seconds"]
    run.write_csv("verify_report.csv", ["suite", "check", "value", "limit", "status"],
                  [(c.suite, c.name, c.value, c.limit, "pass" if c.passed else "fail") for c in stable])
    run.write_csv("verify_timing.csv", ["suite", "seconds", "limit", "status"],
                  [(c.suite, c.value, c.limit, "pass" if c.passed else "fail") for c in timing])
    for suite in SUITES:
        mine = [c for c in checks if c.suite == suite]
        bad = [c for c in mine if not c.passed]
        run.say(f"{suite:<14} {'PASS' if not bad else 'FAIL'}  ({len(mine) - len(bad)}/{len(mine)} checks)")
        for c in bad:
            run.say(f"    failed: {c.name}: value {_fmt(c.value)} vs limit {_fmt(c.limit)}")
    for c in checks:
        run.check(f"{c.suite}: {c.name}", c.passed)


HANDLERS = {
    "scattering": cmd_scattering,
    "thermo": cmd_thermo,
    "delta-f": cmd_delta_f,
    "fock": cmd_fock,
    "trial-state": cmd_trial_state,
    "upper-bound": cmd_upper_bound,
    "bridge": cmd_bridge,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON run configuration")
    common.add_argument("--out", default="dilute_bose_out", help="output directory (default: %(default)s)")
    common.add_argument("--seed", type=int, help="random seed (default: config 'seed' or 0)")
    common.add_argument("--quiet", action="store_true", help="suppress stdout tables")
    common.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSV files")
    common.add_argument("--tol", help="tolerance overrides, e.g. oracle=1e-9,isometry=1e-11")

    parser = argparse.ArgumentParser(prog="dilute-bose", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("scattering", "zero-energy scattering solution, norms and Fourier data")
    p.add_argument("--potential", help="potential spec or run config file")
    p.add_argument("--rmax", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--pmax", type=float)
    p.add_argument("--npoints", type=int)

    p = add("thermo", "ideal Bose gas at one state point")
    p.add_argument("--rho", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--method", choices=["series", "quad"])

    p = add("delta-f", "leading free-energy correction along a temperature schedule")
    p.add_argument("--potential")
    p.add_argument("--schedule", help="c=<value> for beta = c rho^(-2/3)")
    p.add_argument("--rho-grid", dest="rho_grid", help="start:stop:count (log-spaced) or a comma list")

    for name, help_text in (("fock", "exact diagonalisation on a momentum lattice"),
                            ("trial-state", "pair-excitation family of one occupation state"),
                            ("upper-bound", "variational free energy of the trial mixture")):
        p = add(name, help_text)
        p.add_argument("--L", type=float)
        p.add_argument("--cutoff", type=int)
        p.add_argument("--shape", choices=["cube", "ball", "line"])
        p.add_argument("--potential")
        if name == "fock":
            p.add_argument("--N", type=int)
            p.add_argument("--beta", type=float)
            p.add_argument("--dump", action="store_true", default=None, help="write the matrix as COO CSV")
        if name == "trial-state":
            p.add_argument("--alpha", help="occupation spec n1,n2,n3:count;...")
        if name in ("trial-state", "upper-bound"):
            p.add_argument("--shells", help="key=value list: low_min, low_max, high_min, high_max, m_c, ...")
            p.add_argument("--rho", type=float)
            p.add_argument("--box-side", dest="box_side", type=int)
        if name == "upper-bound":
            p.add_argument("--N", type=int)
            p.add_argument("--beta", help="one value or a comma list / start:stop:count sweep")
            p.add_argument("--mu", type=float)
            p.add_argument("--samples", type=int)

    p = add("bridge", "isometry and kinetic-penalty checks of the boundary profile")
    p.add_argument("--L", type=float)
    p.add_argument("--ell", type=float)
    p.add_argument("--corpus", help="basic, random:<count>:<degree>, comma separated")

    p = add("verify", "run every invariant suite")
    p.add_argument("--quick", action="store_true", help="reduced sizes")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        data = load_config(args.config)
        run = Run(args, data, argv)
        HANDLERS[args.command](run)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run.finish()


if __name__ == "__main__":
    sys.exit(main())
