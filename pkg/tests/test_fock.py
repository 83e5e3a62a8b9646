import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose.errors import DomainError, SizeError
from dilute_bose.fock import (MomentumLattice, OccupationState, OperatorMatrix, annihilate, basis_dimension,
                              build_hamiltonian, create, decompose_interaction, entropy_from_gram,
                              entropy_of_mixture, enumerate_basis, exact_free_energy, kinetic_diagonal,
                              ladder_matrix, quartic_element)
from scipy import sparse


def gauss_vhat(p):
    return 3.0 * np.exp(-0.3 * np.asarray(p) ** 2)


@pytest.fixture(scope="module")
def small_line():
    return MomentumLattice.line(2 * math.pi, 2)


def ladder_hamiltonian(lat, N, vhat):
    """Kinetic diagonal plus the quartic sum assembled from ladder matrices."""
    bases = {n: enumerate_basis(lat, n) for n in (N - 2, N - 1, N)}
    vec = lat.vectors
    H = np.diag(kinetic_diagonal(lat, bases[N]))
    for k1, k2, k3, k4 in itertools.product(range(lat.n_modes), repeat=4):
        if np.any(vec[k1] + vec[k2] != vec[k3] + vec[k4]):
            continue
        v = float(vhat(lat.unit * np.linalg.norm(vec[k1] - vec[k3])))
        op = (ladder_matrix(lat, bases[N - 1], bases[N], k1, "adag")
              @ ladder_matrix(lat, bases[N - 2], bases[N - 1], k2, "adag")
              @ ladder_matrix(lat, bases[N - 1], bases[N - 2], k3, "a")
              @ ladder_matrix(lat, bases[N], bases[N - 1], k4, "a"))
        H += v / (2 * lat.volume) * op.toarray()
    return H


def test_basis_counts():
    one = MomentumLattice(1.0, ((0, 0, 0),))
    assert len(enumerate_basis(one, 3)) == 1
    assert basis_dimension(2, 2) == 3
    four = MomentumLattice(1.0, ((0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 0, 1), (0, 0, -1)))
    assert len(enumerate_basis(four, 3, mode_subset=[0, 1, 2, 3])) == 20


def test_lattice_constructors():
    assert MomentumLattice.cube(1.0, 1).n_modes == 27
    assert MomentumLattice.ball(1.0, 1).n_modes == 7
    assert MomentumLattice.line(1.0, 3).n_modes == 7
    with pytest.raises(DomainError):
        MomentumLattice(1.0, ((1, 0, 0),))
    with pytest.raises(DomainError):
        MomentumLattice(-1.0, ((0, 0, 0),))


def test_negation_and_index(small_line):
    neg = small_line.negation
    for i, n in enumerate(small_line.modes):
        assert small_line.modes[neg[i]] == tuple(-c for c in n)
        assert small_line.index(n) == i
    assert small_line.index((9, 0, 0)) == -1


def test_ladder_primitives():
    amp, out = annihilate((0, 0, 2), 0)
    assert amp == pytest.approx(math.sqrt(2)) and out == (0, 2)
    assert annihilate((0, 2), 1) == (0.0, None)
    amp, out = create((0, 2, 2), 2)
    assert amp == pytest.approx(math.sqrt(3)) and out == (0, 2, 2, 2)


def test_canonical_commutator(small_line):
    lat = small_line
    N = 2
    b = {n: enumerate_basis(lat, n) for n in (1, 2, 3)}
    for p, q in itertools.product(range(lat.n_modes), repeat=2):
        aq_then = ladder_matrix(lat, b[3], b[2], p, "a") @ ladder_matrix(lat, b[2], b[3], q, "adag")
        then_aq = ladder_matrix(lat, b[1], b[2], q, "adag") @ ladder_matrix(lat, b[2], b[1], p, "a")
        comm = (aq_then - then_aq).toarray()
        assert np.allclose(comm, np.eye(len(b[N])) * (p == q), atol=1e-14)


def test_number_operator_is_exact(small_line):
    lat = small_line
    b3, b2 = enumerate_basis(lat, 3), enumerate_basis(lat, 2)
    for k in range(lat.n_modes):
        a = ladder_matrix(lat, b3, b2, k, "a")
        num = (a.T @ a).toarray()
        assert np.allclose(np.diag(num), [s.count(k) for s in b3], rtol=4e-16, atol=0)
        assert np.count_nonzero(num - np.diag(np.diag(num))) == 0


def test_condensate_pair_diagonal():
    lat = MomentumLattice.line(2 * math.pi, 1)
    H = build_hamiltonian(lat, 2, gauss_vhat)
    zero = OccupationState((lat.index((0, 0, 0)),) * 2)
    j = H.index[zero]
    assert H.dense()[j, j] == pytest.approx(gauss_vhat(0.0) / lat.volume, rel=1e-14)


def test_free_hamiltonian_is_kinetic(small_line):
    H = build_hamiltonian(small_line, 3, None)
    d = H.dense()
    assert np.count_nonzero(d - np.diag(np.diag(d))) == 0
    p2 = small_line.p2()
    assert np.allclose(np.diag(d), [sum(p2[i] for i in s.modes) for s in H.basis])


@pytest.mark.parametrize("N", [2, 3])
def test_hamiltonian_matches_ladder_assembly(small_line, N):
    H = build_hamiltonian(small_line, N, gauss_vhat)
    oracle = ladder_hamiltonian(small_line, N, gauss_vhat)
    assert np.max(np.abs(H.dense() - oracle)) < 1e-12
    assert np.allclose(np.linalg.eigvalsh(H.dense()), np.linalg.eigvalsh(oracle), atol=1e-12)
    assert H.hermiticity_defect() < 1e-12
    assert H.sector_violation() == 0.0


def test_quartic_element_second_path(small_line):
    lat = small_line
    H = build_hamiltonian(lat, 2, gauss_vhat)
    d = H.dense() - np.diag(kinetic_diagonal(lat, H.basis))
    modes = lat.modes
    for i, bra in enumerate(H.basis):
        for j, ket in enumerate(H.basis):
            total = 0.0
            seen = set()
            for p, q in itertools.product(modes, modes):
                for r in modes:
                    u = tuple(np.subtract(p, r))
                    if (p, q, u) in seen:
                        continue
                    seen.add((p, q, u))
                    total += quartic_element(lat, bra, ket, p, q, u, gauss_vhat)
            assert total == pytest.approx(d[i, j], abs=1e-12)


def test_cross_sector_elements_vanish(small_line):
    lat = small_line
    basis = enumerate_basis(lat, 2)
    for bra, ket in itertools.product(basis, basis):
        if bra.total_momentum(lat) != ket.total_momentum(lat):
            for p, q in itertools.product(lat.modes, lat.modes):
                for r in lat.modes:
                    u = tuple(np.subtract(p, r))
                    assert quartic_element(lat, bra, ket, p, q, u, gauss_vhat) == 0.0


def test_decomposition_sums_to_hamiltonian(small_line):
    labels = np.array([0 if n == (0, 0, 0) else (2 if abs(n[0]) == 1 else 3) for n in small_line.modes])
    dec = decompose_interaction(small_line, 3, gauss_vhat, labels)
    H = build_hamiltonian(small_line, 3, gauss_vhat)
    assert np.max(np.abs(dec.total().dense() - H.dense())) < 1e-13


def test_diagonal_energy_formula(small_line):
    # <alpha|H|alpha> = kinetic + (V_0 (N^2 - N) + sum_{u != v} V_{u-v} a(u) a(v)) / (2 |L|)
    lat = small_line
    H = build_hamiltonian(lat, 3, gauss_vhat)
    d = H.dense()
    for s in H.basis:
        c = np.bincount(np.array(s.modes), minlength=lat.n_modes)
        kin = float(np.sum(lat.p2() * c))
        inter = gauss_vhat(0.0) * (9 - 3)
        for u, v in itertools.permutations(range(lat.n_modes), 2):
            inter += gauss_vhat(lat.unit * np.linalg.norm(lat.vectors[u] - lat.vectors[v])) * c[u] * c[v]
        assert d[H.index[s], H.index[s]] == pytest.approx(kin + inter / (2 * lat.volume), rel=1e-12)


def test_two_level_free_energy():
    lat = MomentumLattice(1.0, ((0, 0, 0),))
    basis = [OccupationState((0,)), OccupationState((0, 0))]
    op = OperatorMatrix(basis, sparse.csr_matrix(np.diag([0.0, 1.7])), lat)
    res = exact_free_energy(op, 2.0)
    assert res.free_energy == pytest.approx(-math.log(1 + math.exp(-3.4)) / 2.0, rel=1e-14)


def test_size_guard(small_line):
    with pytest.raises(SizeError):
        enumerate_basis(small_line, 6, guard=10)


def test_entropy_special_cases():
    assert entropy_of_mixture([1.0], [[1.0, 0.0]]) == 0.0
    g = np.array([0.2, 0.3, 0.5])
    assert entropy_of_mixture(g, np.eye(3)) == pytest.approx(-np.sum(g * np.log(g)), rel=1e-14)
    with pytest.raises(DomainError):
        entropy_of_mixture([0.5, 0.4], np.eye(2))


@settings(max_examples=40, deadline=None)
@given(s=st.floats(-0.999, 0.999))
def test_two_state_entropy(s):
    psi = np.array([[1.0, 0.0], [s, math.sqrt(1 - s * s)]])
    lam = np.array([(1 + abs(s)) / 2, (1 - abs(s)) / 2])
    expected = -np.sum(lam * np.log(lam))
    assert entropy_of_mixture([0.5, 0.5], psi) == pytest.approx(expected, rel=1e-10, abs=1e-14)
    assert entropy_from_gram([0.5, 0.5], psi @ psi.T) == pytest.approx(expected, rel=1e-10, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=5), st.integers(0, 4))
def test_random_states_number_identity(modes, k):
    lat = MomentumLattice.line(2 * math.pi, 2)
    state = tuple(sorted(modes))
    amp, out = annihilate(state, k)
    n = state.count(k)
    if n == 0:
        assert out is None
        return
    back, restored = create(out, k)
    assert restored == state
    assert amp * back == pytest.approx(n, rel=4e-16)
    assert OccupationState(state).counts(lat.n_modes)[k] == n
