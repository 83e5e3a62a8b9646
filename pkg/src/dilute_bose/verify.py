"""Invariant suites shared by ``dilute-bose verify`` and the acceptance tests.

Each suite returns a list of ``Check`` rows. ``quick`` shrinks sample counts
and lattice sizes; the full setting runs every check at its stated size.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from types import SimpleNamespace
from typing import Callable

import numpy as np

from . import bridge as br
from .config import bundled, load_potential
from .excitations import (build_boxes, build_shells, check_in_M, energy_components, error_pair_census,
                          generate_family, lattice_w, pairing_expectation, q_statistics,
                          ratio_prediction)
from .fock import (MomentumLattice, OccupationState, QuarticEngine, build_hamiltonian, decompose_interaction,
                   enumerate_basis, ladder_matrix, sparse_expectation)
from .gibbs import (MixtureState, build_ensemble, build_gamma0, ensemble_stats, entropy_bound, gibbs_mixture,
                    hoeffding_tail, sample_totals, variational_report)
from .potentials import FOUR_PI, evaluate, fourier_hat, mollified_majorant, square_barrier
from .scattering import scattering_length_integral, solve_zero_energy, w_fourier, w_norms
from .thermo import (chemical_potential, critical_density, delta_f_leading, density_quad, free_energy_density)
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    limit: float
    passed: bool


def _le(suite: str, name: str, value: float, limit: float) -> Check:
    return Check(suite, name, float(value), float(limit), bool(value <= limit))


def _ge(suite: str, name: str, value: float, limit: float) -> Check:
    return Check(suite, name, float(value), float(limit), bool(value >= limit))


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def bundled_potentials():
    return {name: load_potential(bundled(f"{name}.yaml")) for name in ("square_barrier", "ramp", "bump")}


def _exact_volume_integral(pot) -> float:
    """4 pi int r^2 V dr by exact integration of each polynomial piece."""
    P = np.polynomial.Polynomial
    total = 0.0
    for i, c in enumerate(pot.coeffs):
        lo, hi = pot.breaks[i], pot.breaks[i + 1]
        integrand = (P(c) * P([lo, 1.0]) ** 2).integ()
        total += integrand(hi - lo) - integrand(0.0)
    return FOUR_PI * total


# --- continuum checks -----------------------------------------------------------

def suite_potentials(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "potentials"
    sq = square_barrier(2.0, 1.0)
    out = [_le(s, "evaluate_inside", abs(evaluate(sq, 0.5) - 2.0), 0.0),
           _le(s, "evaluate_outside", abs(evaluate(sq, 1.5)), 0.0),
           _le(s, "hat0_closed_form", _rel(fourier_hat(sq, 0.0), 8.0 * math.pi / 3.0), tol.quad_rel)]
    for name, pot in bundled_potentials().items():
        direct = _exact_volume_integral(pot)
        out.append(_le(s, f"hat0_integral[{name}]", _rel(fourier_hat(pot, 0.0), direct), tol.quad_rel))
    f = square_barrier(1.0, 1.0)
    dists = []
    for m in ((4, 8) if quick else (4, 8, 16)):
        res = mollified_majorant(f, 1, m)
        grid = np.arange(0.0, 2.0 + 5e-4, 1e-3)
        gap = float(np.min(evaluate(res.potential, grid) - evaluate(f, grid)))
        out.append(_ge(s, f"majorant_dominates[m={m}]", gap, -tol.majorant_slack))
        out.append(_le(s, f"majorant_support[m={m}]", res.support_radius, 2.0))
        dists.append(res.l1_distance)
    out.append(_le(s, "majorant_l1_decreasing", float(np.max(np.diff(dists))), 0.0))
    return out


def suite_scattering(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "scattering"
    t0 = time.perf_counter()
    pot = square_barrier(2.0, 1.0)
    sol = solve_zero_energy(pot, 3.0)
    exact = 1.0 - math.tanh(1.0)
    out = [_le(s, "a_ode_vs_closed_form", _rel(sol.a, exact), tol.scattering_rel),
           _le(s, "a_integral_vs_closed_form", _rel(scattering_length_integral(sol, pot), exact), tol.scattering_rel),
           _le(s, "runtime_seconds", time.perf_counter() - t0, 1.0)]
    return out


def suite_fourier_bound(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "fourier_bound"
    t0 = time.perf_counter()
    lat = MomentumLattice.ball(10.0, 100 if quick else 400)
    p = np.unique(np.sqrt(lat.p2()))
    p = p[p > 0]
    out = []
    for name, pot in bundled_potentials().items():
        sol = solve_zero_energy(pot, 3.0 * pot.range)
        ratio = np.abs(w_fourier(sol, p)) * p ** 2 / (FOUR_PI * sol.a)
        out.append(_le(s, f"max |w_p| p^2 / 4 pi a [{name}]", float(ratio.max()), 1.0 + 1e-12))
    out.append(_le(s, "runtime_seconds", time.perf_counter() - t0, 1.0))
    return out


def suite_identities(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "identities"
    t0 = time.perf_counter()
    out = []
    for name, pot in bundled_potentials().items():
        sol = solve_zero_energy(pot, 3.0 * pot.range)
        nrm = w_norms(sol)
        r1, r2 = nrm.identity_residuals(sol.a)
        out.append(_le(s, f"gradient_identity[{name}]", abs(r1) / nrm.grad_sq, tol.norm_identity_rel))
        out.append(_le(s, f"scattering_identity[{name}]", abs(r2) / (FOUR_PI * sol.a), tol.norm_identity_rel))
    out.append(_le(s, "runtime_seconds", time.perf_counter() - t0, 2.0))
    return out


def thermo_grid(quick: bool) -> list[tuple[float, float]]:
    rhos = (1e-3, 1e-2, 0.1, 1.0, 10.0)
    betas = (0.5, 2.0) if quick else (0.25, 0.5, 2.0, 8.0)
    return [(r, b) for r in rhos for b in betas]


def suite_thermo(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "thermo"
    t0 = time.perf_counter()
    worst = {"rho_c": 0.0, "mu": 0.0, "f0": 0.0, "scaling": 0.0}
    for rho, beta in thermo_grid(quick):
        worst["rho_c"] = max(worst["rho_c"], _rel(critical_density(beta), density_quad(0.0, beta)))
        worst["mu"] = max(worst["mu"], _rel(chemical_potential(rho, beta, "series"),
                                            chemical_potential(rho, beta, "quad")))
        f_s = free_energy_density(rho, beta, "series")
        worst["f0"] = max(worst["f0"], _rel(f_s, free_energy_density(rho, beta, "quad")))
        scaled = rho ** (5.0 / 3.0) * free_energy_density(1.0, rho ** (2.0 / 3.0) * beta, "series")
        worst["scaling"] = max(worst["scaling"], _rel(f_s, scaled))
    out = [_le(s, f"cross_{k}", v, tol.thermo_cross_rel) for k, v in worst.items()]
    out.append(_le(s, "runtime_seconds", time.perf_counter() - t0, 5.0))
    return out


def suite_delta_f(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "delta_f"
    a = 1.0 - math.tanh(1.0)
    rhos = np.geomspace(1e-5, 1e-1, 9)
    below = max(_rel(delta_f_leading(a, r, 2.0 * r), 8 * math.pi * a * r * r) for r in rhos)
    at = max(_rel(delta_f_leading(a, r, r), 8 * math.pi * a * r * r) for r in rhos)
    none = max(_rel(delta_f_leading(a, r, 0.0), 4 * math.pi * a * r * r) for r in rhos)
    jump = 0.0
    for rc in rhos:
        vals = [delta_f_leading(a, rc * (1 + e), rc) for e in (-1e-14, -1e-15, 0.0, 1e-15, 1e-14)]
        jump = max(jump, float(np.max(np.abs(np.diff(vals)))) / (8 * math.pi * a * rc * rc))
    return [_le(s, "branch_R_above_1", below, 1e-15), _le(s, "branch_R_equal_1", at, 1e-15),
            _le(s, "branch_no_condensate_scale", none, 1e-15), _le(s, "continuity_at_rho_c", jump, 1e-12)]


# --- desk lattice ------------------------------------------------------------------

def desk_instance(potential=None, shells: dict | None = None) -> SimpleNamespace:
    """Nine-mode line lattice with a square barrier: the reference desk for the Fock checks."""
    pot = square_barrier(2.0, 1.0) if potential is None else potential
    sol = solve_zero_energy(pot, 3.0 * pot.range)
    lat = MomentumLattice.line(2.0 * math.pi, 4)
    spec = shells or {"low_min": 0.5, "low_max": 1.5, "high_min": 1.5 + 1e-6, "high_max": 4.5, "m_c": 4}
    sh = build_shells(lat, 0.01, spec)
    return SimpleNamespace(pot=pot, sol=sol, lattice=lat, shells=sh, boxes=build_boxes(sh, 1, 1),
                           w=lattice_w(lat, lambda p: w_fourier(sol, p)), vhat=lambda p: fourier_hat(pot, p))


def low_region_alphas(shells, N: int) -> list[OccupationState]:
    """Every alpha with N particles on the zero, infrared and low modes that lies in M."""
    region = (shells.P0,) + shells.PI + shells.PL
    out = []
    for st in enumerate_basis(shells.lattice, N, mode_subset=region):
        try:
            check_in_M(st, shells)
        except Exception:
            continue
        out.append(st)
    return out


def _brute_quartic(lat, bases, v, u1, u2, u3, u4) -> complex:
    N = len(bases) - 1
    a4 = ladder_matrix(lat, bases[N], bases[N - 1], u4, "a")
    a3 = ladder_matrix(lat, bases[N - 1], bases[N - 2], u3, "a")
    c2 = ladder_matrix(lat, bases[N - 2], bases[N - 1], u2, "adag")
    c1 = ladder_matrix(lat, bases[N - 1], bases[N], u1, "adag")
    return complex(np.vdot(v, c1 @ (c2 @ (a3 @ (a4 @ v)))))


def suite_trial_oracle(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "trial_oracle"
    t0 = time.perf_counter()
    d = desk_instance()
    lat, sh = d.lattice, d.shells
    N = 4
    bases = [enumerate_basis(lat, n) for n in range(N + 1)]
    index = {b: i for i, b in enumerate(bases[N])}
    H = build_hamiltonian(lat, N, d.vhat)
    dec = decompose_interaction(lat, N, d.vhat, sh.labels())
    engine = QuarticEngine(lat, d.vhat, sh.labels())
    number_ops = [(ladder_matrix(lat, bases[N], bases[N - 1], k, "a").T @
                   ladder_matrix(lat, bases[N], bases[N - 1], k, "a")) for k in range(lat.n_modes)]
    i0 = lat.index((0, 0, 0))
    ip, im = lat.index((1, 0, 0)), lat.index((-1, 0, 0))
    alphas = [(i0,) * 4, (i0, i0, i0, ip), (i0, i0, ip, ip), (i0, i0, ip, im), (i0, ip, ip, im), (i0, i0, i0, im)]
    if quick:
        alphas = alphas[:5]
    low = list(sh.low_tilde())
    quads = [q for q in itertools.product(low, repeat=4)
             if np.all(lat.vectors[q[0]] + lat.vectors[q[1]] == lat.vectors[q[2]] + lat.vectors[q[3]])]
    worst = dict(norm=0.0, ratio=0.0, pairing=0.0, q=0.0, energy=0.0, parts=0.0)
    for a in alphas:
        fam = generate_family(OccupationState(tuple(sorted(a))), sh, d.boxes, d.w)
        v = fam.vector(index, H.dim)
        worst["norm"] = max(worst["norm"], fam.normalization_defect())
        ops = {o for o in fam.ops if o is not None}
        for st in fam.states:
            for o in ops:
                worst["ratio"] = max(worst["ratio"], ratio_prediction(fam, st, o).defect)
        for q in quads:
            worst["pairing"] = max(worst["pairing"],
                                   abs(pairing_expectation(fam, *q) - _brute_quartic(lat, bases, v, *q)))
        for k in range(lat.n_modes):
            worst["q"] = max(worst["q"], abs(q_statistics(fam, k) - np.vdot(v, number_ops[k] @ v).real))
        full = H.expectation(v).real
        sp = sparse_expectation(engine, fam.states, fam.coefficients, by_group=True)
        parts = dec.kinetic.expectation(v).real + sum(m.expectation(v).real for m in dec.parts.values())
        worst["energy"] = max(worst["energy"], abs(sp["total"].real - full))
        worst["parts"] = max(worst["parts"], abs(parts - full))
    out = [_ge(s, "distinct_alphas", len(alphas), 5),
           _le(s, "normalization", worst["norm"], tol.normalization),
           _le(s, "ratio_identities", worst["ratio"], tol.ratio),
           _le(s, "pairing_vs_brute_force", worst["pairing"], tol.oracle),
           _le(s, "Q_vs_brute_force", worst["q"], tol.oracle),
           _le(s, "family_energy_vs_full_H", worst["energy"], tol.oracle),
           _le(s, "decomposition_vs_full_H", worst["parts"], tol.oracle),
           _le(s, "runtime_seconds", time.perf_counter() - t0, 60.0)]
    return out


def variational_instances(quick: bool):
    """(label, potential or None, shell spec, beta) for the variational checks."""
    sq = square_barrier(2.0, 1.0)
    ir = {"low_min": 1.5, "low_max": 2.5, "high_min": 2.6, "high_max": 4.5, "m_c": 2}
    plain = {"low_min": 0.5, "low_max": 1.5, "high_min": 1.5 + 1e-6, "high_max": 4.5, "m_c": 4}
    cases = [("free/infrared", None, ir, 0.7), ("square/infrared", sq, ir, 0.7),
             ("square/low-band", sq, plain, 0.3), ("square/hot", sq, plain, 0.05)]
    return cases[:2] if quick else cases


def suite_variational(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "variational"
    t0 = time.perf_counter()
    N = 4
    worst_slack = math.inf
    worst_sat = 0.0
    n_states = 0
    for label, pot, spec, beta in variational_instances(quick):
        d = desk_instance(pot if pot is not None else square_barrier(2.0, 1.0), spec)
        vhat = None if pot is None else d.vhat
        H = build_hamiltonian(d.lattice, N, vhat)
        gm, res = gibbs_mixture(H, beta)
        worst_sat = max(worst_sat, abs(variational_report(gm, H, beta, exact=res).gap))
        w = np.zeros(d.lattice.n_modes) if pot is None else d.w
        candidates = []
        for mu in (-0.05, -1.0, -4.0):
            g0 = build_gamma0(build_ensemble(d.shells, beta, mu), N, d.shells, seed=seed)
            candidates += [g0.mixture, g0.mixture.with_families(d.shells, d.boxes, w)]
        alphas = low_region_alphas(d.shells, N)
        rng = np.random.default_rng(seed)
        g = rng.dirichlet(np.ones(len(alphas)))
        mix = MixtureState.from_occupations(g, alphas, d.lattice)
        candidates += [mix, mix.with_families(d.shells, d.boxes, w)]
        for gam in candidates:
            rep = variational_report(gam, H, beta, exact=res)
            worst_slack = min(worst_slack, rep.f_var - rep.f_exact, rep.f_var_bound - rep.f_exact)
            n_states += 1
    return [_ge(s, "min F_var - F_exact", worst_slack, -tol.variational_slack),
            _le(s, "gibbs_saturation", worst_sat, tol.variational_slack),
            _ge(s, "trial_states_checked", n_states, 8),
            _le(s, "runtime_seconds", time.perf_counter() - t0, 30.0)]


def suite_improvement(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "improvement"
    t0 = time.perf_counter()
    pot = square_barrier(0.05, 1.0)
    sol = solve_zero_energy(pot, 3.0)
    nmax = 6 if quick else 8
    lat = MomentumLattice.ball(4.0 * math.pi, nmax * nmax)
    u = lat.unit
    sh = build_shells(lat, 0.01, {"low_min": 0.5 * u, "low_max": 1.2 * u, "high_min": 1.3 * u,
                                  "high_max": nmax * u + 1e-9, "m_c": 4})
    w = lattice_w(lat, lambda p: w_fourier(sol, p))
    alpha = OccupationState(tuple(sorted([lat.index((1, 0, 0)), lat.index((0, 1, 0))])))
    fam = generate_family(alpha, sh, build_boxes(sh, 1, 1), w)
    rep = energy_components(fam, lambda p: fourier_hat(pot, p), w_norms(sol), sol.a)
    ratio = rep.gap / rep.predicted_gap
    return [_le(s, "max |w_k| on high band", float(np.max(np.abs(w[list(sh.PH)]))), 0.2),
            _ge(s, "N_alpha", rep.n_alpha, 1.0),
            _ge(s, "energy_lowered", rep.gap, 1e-300),
            _ge(s, "gap/predicted lower", ratio, 0.5),
            _le(s, "gap/predicted upper", ratio, 2.0),
            _le(s, "runtime_seconds", time.perf_counter() - t0, 60.0)]


def random_family_mixtures(n: int, seed: int, free: bool = False):
    d = desk_instance()
    w = np.zeros(d.lattice.n_modes) if free else d.w
    alphas = low_region_alphas(d.shells, 4)
    families = {}
    rng = np.random.default_rng(seed)
    for _ in range(n):
        k = int(rng.integers(2, min(8, len(alphas)) + 1))
        pick = rng.choice(len(alphas), size=k, replace=False)
        comps = []
        for j in pick:
            if j not in families:
                fam = generate_family(alphas[j], d.shells, d.boxes, w)
                families[j] = (fam.states, fam.coefficients)
            comps.append(families[j])
        yield MixtureState(rng.dirichlet(np.full(k, 0.7)), comps, d.lattice)


def suite_entropy(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "entropy"
    t0 = time.perf_counter()
    n = 12 if quick else 60
    slack = math.inf
    for mix in random_family_mixtures(n, seed):
        eb = entropy_bound(mix)
        slack = min(slack, eb.exact - eb.lower)
    eq = 0.0
    for mix in random_family_mixtures(5 if quick else 20, seed + 1, free=True):
        eb = entropy_bound(mix)
        eq = max(eq, abs(eb.exact - eb.s0), abs(eb.a_bound - 1.0))
    return [_ge(s, "mixtures_checked", n, 12 if quick else 50),
            _ge(s, "min S_exact - (S0 - ln A)", slack, -1e-12),
            _le(s, "free_case_equality", eq, 1e-12),
            _le(s, "runtime_seconds", time.perf_counter() - t0, 30.0)]


def census_families(quick: bool):
    d = desk_instance()
    alphas = low_region_alphas(d.shells, 4)
    for a in alphas[: 6 if quick else len(alphas)]:
        yield generate_family(a, d.shells, d.boxes, d.w)
    if quick:
        return
    # a three-dimensional family with several thousand error pairs
    pot = square_barrier(0.05, 1.0)
    sol = solve_zero_energy(pot, 3.0)
    lat = MomentumLattice.ball(4.0 * math.pi, 9)
    u = lat.unit
    sh = build_shells(lat, 0.01, {"low_min": 0.5 * u, "low_max": 1.2 * u, "high_min": 1.3 * u,
                                  "high_max": 3 * u + 1e-9, "m_c": 4})
    w = lattice_w(lat, lambda p: w_fourier(sol, p))
    alpha = OccupationState(tuple(sorted([lat.index((0, 0, 0))] * 3 + [lat.index((1, 0, 0))])))
    yield generate_family(alpha, sh, build_boxes(sh, 1, 1), w)


def suite_census(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "census"
    t0 = time.perf_counter()
    n_err = 0
    labels_ok = counts_ok = True
    for fam in census_families(quick):
        cen = error_pair_census(fam)
        n_err += len(cen.errors)
        labels_ok &= cen.labels_ok
        counts_ok &= cen.counts_ok
    return [Check(s, "s+t>=4 and t>=1 for every error pair", float(n_err), 0.0, bool(labels_ok)),
            Check(s, "group counts within census bound", float(n_err), 0.0, bool(counts_ok)),
            _ge(s, "error_pairs_examined", n_err, 1 if quick else 1000),
            _le(s, "runtime_seconds", time.perf_counter() - t0, 60.0)]


def bridge_corpus(n_random: int, seed: int) -> list[br.TrigPolynomial]:
    corpus = [br.TrigPolynomial.from_mapping({(0, 0, 0): 1.0}),
              br.TrigPolynomial.from_mapping({(1, 0, 0): 1.0}),
              br.TrigPolynomial.from_mapping({(0, 2, -1): 1.0, (3, 0, 1): 0.5j})]
    corpus += [br.TrigPolynomial.random(5, 10, seed + j) for j in range(n_random)]
    return corpus


def suite_bridge(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "bridge"
    t0 = time.perf_counter()
    iso = 0.0
    margin = math.inf
    needed = 0.0
    for prof in (br.BridgeProfile(10.0, 2.0), br.BridgeProfile(2 * math.pi, 1.0), br.BridgeProfile(5.0, 2.5)):
        for phi in bridge_corpus(4 if quick else 20, seed):
            iso = max(iso, br.isometry_check(prof, phi).defect)
            pen = br.kinetic_penalty(prof, phi, br.PENALTY_CONSTANT)
            margin = min(margin, pen.margin / max(pen.rhs, 1.0))
            needed = max(needed, pen.needed_constant)
    resid = 0.0
    for L in (1.0, 7.3, 215.0):
        for rho in (1e-8, 1e-4, 0.02, 0.5):
            resid = max(resid, br.box_rescale(L, rho).conservation_residual)
    gb = br.GridBridge(br.BridgeProfile(2 * math.pi, 2 * math.pi / 8), 64)
    rng = np.random.default_rng(seed)
    st = rng.normal(size=(3, 64)) + 1j * rng.normal(size=(3, 64))
    st /= np.linalg.norm(st, axis=1)[:, None]
    et = br.entropy_transfer_check(rng.dirichlet(np.ones(3)), st, gb)
    # L = 2 ell puts every point in the layer, where the constant is attained exactly
    return [_le(s, "isometry_defect", iso, tol.isometry),
            _ge(s, "relative penalty margin (C=3pi^2/16)", margin, -1e-12),
            _le(s, "largest constant needed", needed, br.PENALTY_CONSTANT * (1 + 1e-12)),
            _le(s, "rho*|Lambda*| conservation", resid, tol.rescale_rel),
            _le(s, "entropy_transfer_spectrum", et.spectrum_defect, tol.isometry),
            _le(s, "runtime_seconds", time.perf_counter() - t0, 10.0)]


def hoeffding_ensemble():
    """A larger truncated ensemble: ball lattice with a populated infrared band."""
    lat = MomentumLattice.ball(2 * math.pi, 9)
    sh = build_shells(lat, 0.01, {"low_min": 1.5, "low_max": 2.5, "high_min": 2.6, "high_max": 3.0, "m_c": 3})
    return build_ensemble(sh, 0.4, -0.2)


def suite_hoeffding(quick: bool, seed: int, tol: Tolerances) -> list[Check]:
    s = "hoeffding"
    t0 = time.perf_counter()
    ens = hoeffding_ensemble()
    stats = ensemble_stats(ens)
    n = 20_000 if quick else 100_000
    totals = sample_totals(ens, n, seed)
    sd = math.sqrt(stats.cap_square_sum)
    out = []
    for frac in (0.25, 0.5, 0.75):
        t = frac * sd
        freq = float(np.mean(np.abs(totals - stats.mean_total) >= t))
        out.append(_le(s, f"tail frequency at t={t:.4g}", freq, hoeffding_tail(ens, t)))
    out.append(_ge(s, "samples", n, 20_000 if quick else 100_000))
    out.append(_le(s, "runtime_seconds", time.perf_counter() - t0, 10.0))
    return out


SUITES: dict[str, Callable[[bool, int, Tolerances], list[Check]]] = {
    "potentials": suite_potentials,
    "scattering": suite_scattering,
    "fourier_bound": suite_fourier_bound,
    "thermo": suite_thermo,
    "delta_f": suite_delta_f,
    "identities": suite_identities,
    "trial_oracle": suite_trial_oracle,
    "variational": suite_variational,
    "improvement": suite_improvement,
    "entropy": suite_entropy,
    "census": suite_census,
    "bridge": suite_bridge,
    "hoeffding": suite_hoeffding,
}


def run_all(quick: bool = False, seed: int = 0, tol: Tolerances = DEFAULT,
            only: list[str] | None = None) -> list[Check]:
    out: list[Check] = []
    for name, fn in SUITES.items():
        if only and name not in only:
            continue
        out.extend(fn(quick, seed, tol))
    return out
