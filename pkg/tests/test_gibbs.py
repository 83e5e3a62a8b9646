import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose.errors import DomainError
from dilute_bose.excitations import ZERO, INFRA, LOW, build_shells
from dilute_bose.fock import MomentumLattice, OccupationState, build_hamiltonian, enumerate_basis
from dilute_bose.gibbs import (MixtureState, TruncatedModeEnsemble, build_ensemble, build_gamma0, choose_sector,
                               cutoff_profile, ensemble_stats, entropy_bound, gibbs_mixture, hoeffding_tail,
                               pairing_aggregate, reduced_density, sample_totals, sector_distribution,
                               variational_report)
from dilute_bose.verify import desk_instance, hoeffding_ensemble, low_region_alphas

INFRARED = {"low_min": 1.5, "low_max": 2.5, "high_min": 2.6, "high_max": 4.5, "m_c": 2}


@pytest.fixture(scope="module")
def infrared_desk():
    return desk_instance(shells=INFRARED)


@pytest.fixture(scope="module")
def interacting_H(infrared_desk):
    return build_hamiltonian(infrared_desk.lattice, 4, infrared_desk.vhat)


def test_cutoff_values():
    lat = MomentumLattice.line(2 * math.pi, 4)
    sh = build_shells(lat, 0.01, {"low_min": 1.5, "low_max": 2.5, "high_min": 2.6, "high_max": 4.5, "m_c": 4})
    caps = cutoff_profile(sh, 0.5, 0.0)
    for k in sh.PI:
        assert caps[k] == math.ceil(4 ** (1 / 3) / 0.5) == 4
    for k in sh.PL:
        assert caps[k] == 4
    assert all(c >= 1 for c in caps.values())
    with pytest.raises(DomainError):
        cutoff_profile(sh, 0.5, 0.1)


def test_single_cap_mean():
    lat = MomentumLattice.line(2 * math.pi, 1)
    ens = TruncatedModeEnsemble((1,), np.array([0.8]), np.array([1]), 1.3, 0.0, lat)
    st_ = ensemble_stats(ens)
    assert st_.means[0] == pytest.approx(1 / (math.exp(1.3 * 0.8) + 1), rel=1e-14)
    direct = -math.log(1 + math.exp(-1.04)) / 1.3
    assert st_.free_energy == pytest.approx(direct, rel=1e-12)


def test_hoeffding_formula(infrared_desk):
    ens = build_ensemble(infrared_desk.shells, 0.7, -0.05)
    assert hoeffding_tail(ens, 0.0) == 2.0
    s1 = ensemble_stats(ens).cap_square_sum
    assert ensemble_stats(ens.scaled(2)).cap_square_sum == 4 * s1
    with pytest.raises(DomainError):
        hoeffding_tail(ens, -1.0)


def test_sampled_tails_respect_bound():
    ens = hoeffding_ensemble()
    stats = ensemble_stats(ens)
    totals = sample_totals(ens, 20000, 7)
    assert abs(totals.mean() - stats.mean_total) < 5 * totals.std() / math.sqrt(20000)
    sd = math.sqrt(stats.cap_square_sum)
    for t in (0.25 * sd, 0.5 * sd):
        assert np.mean(np.abs(totals - stats.mean_total) >= t) <= hoeffding_tail(ens, t)


def test_sector_distribution_is_normalised(infrared_desk):
    dist = sector_distribution(build_ensemble(infrared_desk.shells, 0.7, -0.5))
    assert dist.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(dist >= 0)


def test_choose_sector_tie_break():
    dist = np.array([0.3, 0.3, 0.1, 0.3])
    assert choose_sector(dist, 3) == 3
    assert choose_sector(dist, 3, target=0.4) == 0
    assert choose_sector(dist, 2, target=2) == 1


def test_gamma0_respects_caps_and_support(infrared_desk):
    sh = infrared_desk.shells
    lab = sh.labels()
    for beta, mu in ((0.7, -0.05), (0.2, -0.5), (2.0, -1.0)):
        ens = build_ensemble(sh, beta, mu)
        g0 = build_gamma0(ens, 4, sh)
        caps = dict(zip(ens.modes, ens.caps))
        assert g0.mixture.weights.sum() == pytest.approx(1.0, abs=1e-12)
        for states, _ in g0.mixture.components:
            (alpha,) = states
            assert alpha.N == 4
            for k in set(alpha.modes):
                assert lab[k] in (ZERO, INFRA, LOW)
                if k != sh.P0:
                    assert alpha.count(k) <= caps[k]


def test_cold_limit_is_condensate(infrared_desk):
    sh = infrared_desk.shells
    g0 = build_gamma0(build_ensemble(sh, 200.0, -0.01), 4, sh)
    top = int(np.argmax(g0.mixture.weights))
    assert g0.mixture.components[top][0][0] == OccupationState((sh.P0,) * 4)
    assert g0.mixture.weights[top] > 1 - 1e-12


def test_sampled_gamma0_is_reproducible():
    ens = hoeffding_ensemble()
    sh = build_shells(ens.lattice, 0.01, {"low_min": 1.5, "low_max": 2.5, "high_min": 2.6, "high_max": 3.0,
                                          "m_c": 3})
    a = build_gamma0(ens, 12, sh, seed=11, n_samples=300)
    b = build_gamma0(ens, 12, sh, seed=11, n_samples=300)
    assert not a.exact and a.seed == 11
    assert np.array_equal(a.mixture.weights, b.mixture.weights)
    assert [c[0] for c in a.mixture.components] == [c[0] for c in b.mixture.components]


def test_gibbs_mixture_saturates(infrared_desk, interacting_H):
    for beta in (0.3, 0.7, 2.0):
        gm, res = gibbs_mixture(interacting_H, beta)
        rep = variational_report(gm, interacting_H, beta, exact=res)
        assert abs(rep.gap) < 1e-10


def test_orthonormal_entropy_bound(infrared_desk):
    alphas = low_region_alphas(infrared_desk.shells, 4)[:5]
    g = np.array([0.1, 0.2, 0.3, 0.25, 0.15])
    eb = entropy_bound(MixtureState.from_occupations(g, alphas, infrared_desk.lattice))
    assert eb.a_bound == 1.0
    assert eb.lower == pytest.approx(eb.s0, abs=1e-15)
    assert eb.exact == pytest.approx(eb.s0, rel=1e-13)


def test_entropy_bound_requires_normalised_components(infrared_desk):
    lat = infrared_desk.lattice
    mix = MixtureState([1.0], [([OccupationState((0, 0, 0, 0))], np.array([2.0]))], lat)
    with pytest.raises(DomainError):
        entropy_bound(mix)


def test_weights_validated(infrared_desk):
    with pytest.raises(DomainError):
        MixtureState.from_occupations([0.5, 0.6], low_region_alphas(infrared_desk.shells, 4)[:2],
                                      infrared_desk.lattice)


def test_free_gamma0_variational_gap_reported(infrared_desk):
    H = build_hamiltonian(infrared_desk.lattice, 4, None)
    sh = infrared_desk.shells
    g0 = build_gamma0(build_ensemble(sh, 0.7, -0.05), 4, sh)
    rep = variational_report(g0.mixture, H, 0.7)
    assert rep.holds and rep.gap >= -1e-10
    assert rep.excess is None
    names = [n for n, _ in rep.rows()]
    assert names[:3] == ["U", "S_exact", "S0"]


def test_pairing_aggregate_pure_condensate(infrared_desk):
    sh = infrared_desk.shells
    mix = MixtureState.from_occupations([1.0], [OccupationState((sh.P0,) * 4)], infrared_desk.lattice)
    value, target, diff = pairing_aggregate(mix, sh, 4, 0.01, 0.02)
    assert (value, target, diff) == (1.0, 2.0, -1.0)


def test_reduced_density_below_input():
    assert reduced_density(0.01, 10.0) < 0.01


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), beta=st.floats(0.05, 3.0), families=st.booleans())
def test_random_mixtures_obey_variational_and_entropy_bounds(infrared_desk, interacting_H, seed, beta, families):
    d = infrared_desk
    alphas = low_region_alphas(d.shells, 4)
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, len(alphas) + 1))
    pick = rng.choice(len(alphas), size=k, replace=False)
    mix = MixtureState.from_occupations(rng.dirichlet(np.ones(k)), [alphas[j] for j in pick], d.lattice)
    if families:
        mix = mix.with_families(d.shells, d.boxes, d.w)
    rep = variational_report(mix, interacting_H, beta)
    assert rep.holds
    assert rep.entropy.holds
    assert rep.f_var_bound >= rep.f_var - 1e-12
