import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose.errors import DomainError
from dilute_bose.potentials import (evaluate, fourier_hat, mollified_majorant, mollifier, radial_integral, ramp,
                                    square_barrier, table_potential, zero_potential)


def test_square_barrier_values(barrier):
    assert evaluate(barrier, 0.5) == 2.0
    assert evaluate(barrier, 1.5) == 0.0


def test_ramp_value():
    assert evaluate(ramp(1.0, 1.0), 0.25) == pytest.approx(0.75, abs=1e-15)


def test_negative_radius_rejected(barrier):
    with pytest.raises(DomainError):
        evaluate(barrier, -0.1)


def test_hat_at_zero_closed_form(barrier):
    assert fourier_hat(barrier, 0.0) == pytest.approx(8 * math.pi / 3, rel=1e-10)


def test_hat_decays_at_large_momentum(barrier):
    h0 = fourier_hat(barrier, 0.0)
    for p in (60.0, 120.0, 333.0):
        assert abs(fourier_hat(barrier, p)) < h0 / 10


def test_zero_potential_transform():
    z = zero_potential()
    assert np.all(np.asarray(fourier_hat(z, np.array([0.0, 1.0, 7.0]))) == 0.0)


def test_square_barrier_transform_closed_form(barrier):
    # 4 pi V0 (sin p - p cos p) / p^3 for R0 = 1
    for p in (0.3, 2.0, 9.5):
        exact = 4 * math.pi * 2.0 * (math.sin(p) - p * math.cos(p)) / p ** 3
        assert fourier_hat(barrier, p) == pytest.approx(exact, rel=1e-9, abs=1e-12)


def test_table_potential_interpolates_samples():
    r = np.linspace(0.0, 1.0, 11)
    v = 1.0 - r ** 2
    pot = table_potential(r, v)
    assert np.allclose(evaluate(pot, r), v, atol=1e-14)
    assert pot.range == pytest.approx(1.0)


def test_mollifier_unit_mass():
    for m in (1, 4, 8, 16):
        assert mollifier(m).l1_norm() == pytest.approx(1.0, abs=1e-8)


def test_majorant_of_zero_is_zero():
    res = mollified_majorant(zero_potential(), 1, 8)
    assert res.l1_distance == 0.0


def test_majorant_dominates_and_converges():
    f = square_barrier(1.0, 1.0)
    grid = np.arange(0.0, 2.0 + 5e-4, 1e-3)
    dists = []
    for m in (4, 8, 16):
        res = mollified_majorant(f, 1, m)
        assert np.min(evaluate(res.potential, grid) - evaluate(f, grid)) >= -1e-12
        assert res.support_radius <= 2.0
        dists.append(res.l1_distance)
    assert dists[0] > dists[1] > dists[2]


@settings(max_examples=25, deadline=None)
@given(v0=st.floats(0.05, 5.0), r0=st.floats(0.3, 2.0))
def test_hat_at_zero_is_volume_integral(v0, r0):
    pot = ramp(v0, r0)
    direct = radial_integral(pot, np.ones_like)
    exact = 4 * math.pi * v0 * r0 ** 3 / 12.0
    assert direct == pytest.approx(exact, rel=1e-10)
    assert fourier_hat(pot, 0.0) == pytest.approx(exact, rel=1e-10)
