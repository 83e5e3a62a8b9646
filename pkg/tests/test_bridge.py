import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose import bridge as br
from dilute_bose.errors import DomainError

ONE = br.TrigPolynomial.from_mapping({(0, 0, 0): 1.0})
WAVE = br.TrigPolynomial.from_mapping({(1, 0, 0): 1.0})


def test_profile_shape():
    prof = br.BridgeProfile(10.0, 2.0)
    assert prof.q(5.0) == 1.0
    assert prof.q(2.0) == pytest.approx(1.0)
    assert prof.q(-2.0) == pytest.approx(0.0, abs=1e-15)
    assert prof.q(12.0) == pytest.approx(0.0, abs=1e-15)
    assert prof.q(13.0) == 0.0
    # q(x)^2 + q(-x)^2 = 1 inside the left layer
    x = np.linspace(-2.0, 2.0, 41)
    assert np.allclose(prof.q(x) ** 2 + prof.q(-x) ** 2, 1.0, atol=1e-15)
    with pytest.raises(DomainError):
        br.BridgeProfile(3.0, 2.0)


def test_profile_derivative_matches_finite_difference():
    prof = br.BridgeProfile(10.0, 2.0)
    x = np.array([-1.3, 0.4, 1.7, 8.5, 11.2])
    fd = (prof.q(x + 1e-6) - prof.q(x - 1e-6)) / 2e-6
    assert np.allclose(prof.dq(x), fd, atol=1e-8)


def test_one_slice_integral():
    prof = br.BridgeProfile(10.0, 2.0)
    x = np.linspace(-2.0, 12.0, 200001)
    q2 = prof.q(x) ** 2
    assert np.sum((q2[1:] + q2[:-1]) / 2) * (x[1] - x[0]) == pytest.approx(10.0, rel=1e-9)


@pytest.mark.parametrize("L,ell", [(10.0, 2.0), (2 * math.pi, 1.0), (5.0, 2.5)])
def test_isometry_examples(L, ell):
    prof = br.BridgeProfile(L, ell)
    one = br.isometry_check(prof, ONE)
    assert one.norm_in == pytest.approx(L ** 3)
    assert one.defect < 1e-10
    assert br.isometry_check(prof, WAVE).defect < 1e-10
    assert br.isometry_check(prof, br.TrigPolynomial.random(5, 12, 3)).defect < 1e-10


def test_non_integer_frequency_rejected():
    with pytest.raises(DomainError):
        br.TrigPolynomial(np.array([[0.5, 0.0, 0.0]]), np.array([1.0 + 0j]))


def test_constant_penalty_closed_form():
    prof = br.BridgeProfile(10.0, 2.0)
    pen = br.kinetic_penalty(prof, ONE, br.CORPUS_CONSTANT)
    assert pen.gradient == 0.0
    assert pen.lhs == pytest.approx(3 * (math.pi / 8.0) ** 2 * 4.0 * 100.0, rel=1e-12)
    assert pen.boundary_mass == pytest.approx(1000.0 - 6.0 ** 3, rel=1e-12)
    assert pen.margin > 0
    assert br.kinetic_penalty(prof, WAVE, br.CORPUS_CONSTANT).margin > 0


def test_provable_constant_is_sharp_when_layer_fills_cell():
    prof = br.BridgeProfile(4.0, 2.0)
    pen = br.kinetic_penalty(prof, ONE)
    assert pen.needed_constant == pytest.approx(br.PENALTY_CONSTANT, rel=1e-12)


def test_penalty_scales_as_inverse_square():
    a = br.PenaltyResult(1.0, 0.0, 5.0, 1.0, 1.2)
    b = br.PenaltyResult(1.0, 0.0, 5.0, 2.0, 1.2)
    assert b.penalty == pytest.approx(a.penalty / 4)


def test_box_rescale():
    res = br.box_rescale(7.0, 1e-4)
    assert res.factor == pytest.approx((1 + 2 * 1e-4 ** (41 / 120)) ** 3, rel=1e-15)
    assert res.factor == pytest.approx(1.28072940098178352879775930911, rel=1e-15)
    assert res.rho_star < 1e-4
    assert res.conservation_residual < 1e-14
    tiny = br.box_rescale(7.0, 1e-40)
    assert tiny.rho_star / 1e-40 == pytest.approx(1.0, abs=1e-12)


def test_grid_bridge_is_isometry():
    gb = br.GridBridge(br.BridgeProfile(2 * math.pi, 2 * math.pi / 8), 64)
    B = gb.matrix()
    assert B.shape == (64 + 2 * gb.k, 64)
    assert np.max(np.abs(B.T @ B - np.eye(64))) < 1e-14
    with pytest.raises(DomainError):
        br.GridBridge(br.BridgeProfile(2 * math.pi, 1.0), 64).k


def test_entropy_transfer():
    gb = br.GridBridge(br.BridgeProfile(2 * math.pi, 2 * math.pi / 8), 64)
    pure = np.zeros((1, 64))
    pure[0, 5] = 1.0
    single = br.entropy_transfer_check([1.0], pure, gb)
    assert single.before == 0.0 and single.after == pytest.approx(0.0, abs=1e-14)
    rng = np.random.default_rng(4)
    st_ = rng.normal(size=(3, 64)) + 1j * rng.normal(size=(3, 64))
    st_ /= np.linalg.norm(st_, axis=1)[:, None]
    res = br.entropy_transfer_check([0.5, 0.3, 0.2], st_, gb)
    assert res.spectrum_defect < 1e-10 and res.weights_unchanged and res.holds


def test_shift_scan_beats_average():
    prof = br.BridgeProfile(10.0, 2.0)
    rng = np.random.default_rng(9)
    dens = rng.random(200)
    scan = br.shift_scan(dens, prof)
    assert scan.best_weight <= scan.average + 1e-12
    frac = float(np.mean(prof.layer(10.0 * np.arange(200) / 200)))
    assert scan.average == pytest.approx(frac * dens.sum(), rel=1e-12)
    with pytest.raises(DomainError):
        br.shift_scan(-dens, prof)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), ratio=st.floats(2.0, 6.0), degree=st.integers(0, 5))
def test_corpus_properties(seed, ratio, degree):
    prof = br.BridgeProfile(ratio * 1.5, 1.5)
    phi = br.TrigPolynomial.random(degree, 8, seed)
    assert br.isometry_check(prof, phi).defect < 1e-10
    pen = br.kinetic_penalty(prof, phi)
    assert pen.needed_constant <= br.PENALTY_CONSTANT * (1 + 1e-12)
