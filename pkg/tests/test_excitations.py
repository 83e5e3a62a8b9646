import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose.errors import DomainError
from dilute_bose.excitations import (HIGH, PairExcitationOp, a_coefficients, apply_op, build_boxes, build_shells,
                                     check_in_M, complement_mass, decompositions, energy_components,
                                     error_pair_census, generate_family, high_occupation_bound, is_nontrivial,
                                     lattice_w, n_alpha, pairing_expectation, q_statistics, ratio_prediction)
from dilute_bose.fock import MomentumLattice, OccupationState, enumerate_basis, ladder_matrix
from dilute_bose.potentials import square_barrier
from dilute_bose.scattering import solve_zero_energy, w_fourier, w_norms
from dilute_bose.verify import desk_instance


@pytest.fixture(scope="module")
def desk():
    return desk_instance()


@pytest.fixture(scope="module")
def ball():
    sol = solve_zero_energy(square_barrier(2.0, 1.0), 3.0)
    lat = MomentumLattice.ball(2 * math.pi, 9)
    sh = build_shells(lat, 0.01, {"low_min": 1, "low_max": 1, "high_min": 2, "high_max": 3, "m_c": 3})
    w = lattice_w(lat, lambda p: w_fourier(sol, p))
    return lat, sh, build_boxes(sh, 1, 1), w


def ball_families(ball):
    lat, sh, boxes, w = ball
    z, u, v = lat.index((0, 0, 0)), lat.index((1, 0, 0)), lat.index((0, 1, 0))
    return [generate_family(OccupationState(tuple(sorted(a))), sh, boxes, w)
            for a in [(z, z), (z, z, u), (z, u, v), (z, z, u, v)]]


def test_default_shell_parameters():
    lat = MomentumLattice.line(2 * math.pi, 2)
    rho = 1e-3
    sh = build_shells(lat, rho, {"low_min": 0.5, "low_max": 1.5, "high_min": 1.6, "high_max": 3.0})
    base = rho ** (1 / 200)
    assert (sh.eps_L, sh.eta_L, sh.eps_H, sh.eta_H) == pytest.approx((base,) * 4, rel=1e-15)
    assert sh.m_c == math.ceil(rho ** (-3 / 200))


def test_desk_shell_membership(ball):
    lat, sh, _, _ = ball
    n2 = lat.norm_sq()
    assert sorted(sh.PL) == sorted(i for i in range(lat.n_modes) if n2[i] == 1)
    assert sorted(sh.PH) == sorted(i for i in range(lat.n_modes) if 4 <= n2[i] <= 9)
    assert len(sh.PH) == 96
    groups = [{sh.P0}, set(sh.PI), set(sh.PL), set(sh.PH)]
    for a, b in itertools.combinations(groups, 2):
        assert not a & b


def test_bad_overrides():
    lat = MomentumLattice.line(2 * math.pi, 2)
    with pytest.raises(DomainError):
        build_shells(lat, 0.01, {"low_min": 2.0, "low_max": 1.0})
    with pytest.raises(DomainError):
        build_shells(lat, 0.01, {"radius": 1.0})


def test_nontrivial_examples():
    u, v = (1, 0, 0), (0, 1, 0)
    assert is_nontrivial([u])
    assert not is_nontrivial([u, (-1, 0, 0)])
    assert not is_nontrivial([u, v, (1, 1, 0)])
    # (1,0,0) + (0,1,0) equals (2,0,0) + (-1,1,0)
    assert not is_nontrivial([u, v, (2, 0, 0), (-1, 1, 0)])
    assert is_nontrivial([u, v])


def test_alpha_outside_low_region_rejected(desk):
    with pytest.raises(DomainError):
        check_in_M(OccupationState((0, 3)), desk.shells)


def test_zero_w_family_is_alpha(desk):
    alpha = OccupationState((0, 0, 1))
    fam = generate_family(alpha, desk.shells, desk.boxes, np.zeros(desk.lattice.n_modes))
    assert fam.states == [alpha]
    assert fam.C_alpha == 1.0
    assert fam.coefficient(alpha) == 1.0


def test_family_invariants(ball):
    for fam in ball_families(ball):
        assert fam.normalization_defect() < 1e-12
        assert fam.is_real()
        assert np.max(np.abs(fam.coefficients.imag)) < 1e-15
        alpha_lows = Counter(fam.alpha.modes)
        for s in fam.states:
            assert len(set(fam.high_modes(s))) == len(fam.high_modes(s))
            assert is_nontrivial([fam.lattice.modes[u] for u in fam.depleted(s)])
            c = Counter(s.modes)
            for members in fam.boxes.members().values():
                assert sum(c[m] != alpha_lows[m] for m in members) <= 1


def test_normal_form(ball):
    # condensate ops carry (p, -p); apart from that no two created momenta are equal or opposite
    for fam in ball_families(ball):
        vec = fam.lattice.vectors
        for j in range(fam.size):
            reps = []
            for op in fam.path(j):
                reps.extend(op.create[:1] if op.is_condensate else op.create)
            for a, b in itertools.combinations(reps, 2):
                assert tuple(vec[a]) != tuple(vec[b])
                assert tuple(vec[a]) != tuple(-vec[b])


def test_subset_closure(ball):
    for fam in ball_families(ball)[:3]:
        for j in range(fam.size):
            path = fam.path(j)
            for r in range(len(path) + 1):
                for sub in itertools.combinations(path, r):
                    s = fam.alpha
                    for op in sub:
                        s = apply_op(s, op)
                    assert s in fam.index


def test_path_product_matches_closed_form(ball):
    for fam in ball_families(ball):
        for j in range(fam.size):
            s = fam.alpha
            prod = 1.0 + 0j
            for op in fam.path(j):
                chk = ratio_prediction(fam, s, op)
                assert chk.kind in ("condensate", "clean")
                prod *= chk.predicted
                s = apply_op(s, op)
            assert prod == pytest.approx(fam.coefficients[j] / fam.coefficients[0], rel=1e-12)


def test_condensate_ratio(desk):
    alpha = OccupationState((desk.shells.P0,) * 4)
    fam = generate_family(alpha, desk.shells, desk.boxes, desk.w)
    k = desk.lattice.index((2, 0, 0))
    op = PairExcitationOp((0, 0), (k, desk.lattice.negation[k]))
    chk = ratio_prediction(fam, alpha, op)
    expected = -desk.w[k] * math.sqrt(12) / desk.lattice.volume
    assert chk.actual == pytest.approx(expected, rel=1e-12)


def test_forbidden_low_pairs_give_zero(desk):
    lat = desk.lattice
    z, u, m = lat.index((0, 0, 0)), lat.index((1, 0, 0)), lat.index((-1, 0, 0))
    fam = generate_family(OccupationState(tuple(sorted((z, z, u, m)))), desk.shells, desk.boxes, desk.w)
    k = lat.index((3, 0, 0))
    km = lat.index((-3, 0, 0))
    op = PairExcitationOp((u, m), (k, km))
    assert apply_op(fam.alpha, op) not in fam.index
    assert ratio_prediction(fam, fam.alpha, op).actual == 0
    assert pairing_expectation(fam, z, z, u, m) == 0
    assert a_coefficients(fam, u, m, k, km, k, km).value == 0


def test_q_statistics_against_number_operator(ball):
    lat = MomentumLattice.line(2 * math.pi, 4)
    d = desk_instance()
    fam = generate_family(OccupationState((0, 0, 1)), d.shells, d.boxes, d.w)
    basis = enumerate_basis(lat, 3)
    lower = enumerate_basis(lat, 2)
    v = fam.vector({b: i for i, b in enumerate(basis)}, len(basis))
    for k in range(lat.n_modes):
        a = ladder_matrix(lat, basis, lower, k, "a")
        assert q_statistics(fam, k) == pytest.approx(np.vdot(v, a.T @ (a @ v)).real, abs=1e-10)


def test_depletion_and_high_bound(ball):
    for fam in ball_families(ball):
        sh = fam.shells
        for u in sh.PL:
            a = fam.alpha_counts[u]
            if a:
                gap = a - q_statistics(fam, u)
                assert gap >= -1e-15
                assert gap == pytest.approx(complement_mass(fam, u), abs=1e-12)
        for k in sh.PH[:20]:
            assert q_statistics(fam, k) <= high_occupation_bound(fam, k) * (1 + 1e-12) + 1e-300


def test_n_alpha_examples(ball):
    lat, sh, _, _ = ball
    z, u, v = lat.index((0, 0, 0)), lat.index((1, 0, 0)), lat.index((0, 1, 0))
    assert n_alpha(OccupationState((z,) * 5), sh) == 25
    alpha = OccupationState(tuple(sorted((z, z, u, v))))
    low = sh.low_tilde()
    c = Counter(alpha.modes)
    neg = lat.negation
    direct = c[z] ** 2 + sum(2 * c[a] * c[b] for a in low for b in low if a != b and b != neg[a])
    assert n_alpha(alpha, sh) == direct == 24
    swapped = OccupationState(tuple(sorted((z, z, lat.index((0, 1, 0)), lat.index((1, 0, 0))))))
    assert n_alpha(swapped, sh) == n_alpha(alpha, sh)


def test_free_energy_components_vanish():
    d = desk_instance()
    fam = generate_family(OccupationState((0, 0, 1)), d.shells, d.boxes, np.zeros(d.lattice.n_modes))
    zero_sol = solve_zero_energy(square_barrier(1e-300, 1.0), 3.0)
    rep = energy_components(fam, None, w_norms(zero_sol), 0.0)
    for ln in rep.lines:
        if ln.name != "kinetic":
            assert ln.psi == 0.0 and ln.alpha == 0.0
    assert rep.total_psi == pytest.approx(rep.total_alpha)


def test_energy_lowered_on_desk(desk):
    fam = generate_family(OccupationState((0, 0, 0, 0)), desk.shells, desk.boxes, desk.w)
    rep = energy_components(fam, desk.vhat, w_norms(desk.sol), desk.sol.a)
    assert rep.total_psi < rep.total_alpha
    assert rep.n_alpha == 16


def test_census_condensate_has_no_errors(ball):
    fam = ball_families(ball)[0]
    cen = error_pair_census(fam)
    assert cen.errors == []
    assert cen.n_pairs == cen.n_main


def test_census_labels(ball):
    fam = ball_families(ball)[3]
    cen = error_pair_census(fam)
    assert cen.labels_ok and cen.counts_ok
    low = set(fam.shells.low_tilde()) | set(fam.shells.PI)
    for e in cen.errors[:200]:
        cb = Counter(m for m in fam.states[e.beta].modes if m in low)
        cg = Counter(m for m in fam.states[e.gamma].modes if m in low)
        assert cb == cg


def test_decompositions_contain_generation_path(ball):
    fam = ball_families(ball)[2]
    for j in range(fam.size):
        ops = Counter((tuple(sorted(o.annihilate)), tuple(sorted(o.create))) for o in fam.path(j))
        assert ops in decompositions(fam, fam.states[j])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)), max_size=5))
def test_nontrivial_matches_definition(vectors):
    elems = sorted(set(vectors))
    ok = True
    sums = []
    for a, b in itertools.combinations(elems, 2):
        s = tuple(x + y for x, y in zip(a, b))
        if s == (0, 0, 0) or (s in elems and s not in (a, b)) or s in sums:
            ok = False
        sums.append(s)
    assert is_nontrivial(vectors) == ok
