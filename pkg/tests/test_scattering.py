import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose.errors import DomainError
from dilute_bose.potentials import FOUR_PI, ramp, square_barrier, zero_potential
from dilute_bose.scattering import (fit_derivative_constant, scattering_length_integral, solve_zero_energy,
                                    w_fourier, w_norms)

A_BARRIER = 0.238405844044235111880541717395  # 1 - tanh(1), mpmath


def test_barrier_scattering_length(barrier, barrier_solution):
    assert barrier_solution.a == pytest.approx(A_BARRIER, rel=1e-8)
    assert scattering_length_integral(barrier_solution, barrier) == pytest.approx(A_BARRIER, rel=1e-8)


def test_exterior_profile(barrier_solution):
    assert barrier_solution.w(2.0) == pytest.approx(A_BARRIER / 2, rel=1e-8)
    r = np.linspace(1.2, 3.0, 7)
    assert np.allclose(barrier_solution.w(r), A_BARRIER / r, rtol=1e-8)


def test_zero_potential():
    sol = solve_zero_energy(zero_potential(), 2.0)
    assert sol.a == 0.0
    n = w_norms(sol)
    assert (n.grad_sq, n.half_vw, n.half_vw2, n.half_v0) == (0.0, 0.0, 0.0, 0.0)


def test_weak_barrier_near_born():
    sol = solve_zero_energy(square_barrier(0.02, 1.0), 3.0)
    born = 0.02 / 6.0
    assert abs(sol.a - born) / born < 0.02
    # closed form R0 - tanh(k R0)/k with k = 0.1
    assert sol.a == pytest.approx(0.00332005375044182888578634294492, rel=1e-8)


def test_identities(barrier_solution):
    n = w_norms(barrier_solution)
    r1, r2 = n.identity_residuals(barrier_solution.a)
    assert abs(r1) <= 1e-6 * n.grad_sq
    assert abs(r2) <= 1e-6 * FOUR_PI * barrier_solution.a


def test_fourier_small_momentum_limit(barrier_solution):
    a = barrier_solution.a
    for p in (0.01, 0.05, 0.09):
        assert w_fourier(barrier_solution, p) * p ** 2 == pytest.approx(FOUR_PI * a, rel=0.01)


def test_fourier_rejects_zero(barrier_solution):
    with pytest.raises(DomainError):
        w_fourier(barrier_solution, np.array([0.0, 1.0]))


def test_derivative_constant_finite(barrier_solution):
    c, _ = fit_derivative_constant(barrier_solution, np.arange(1, 40, dtype=float))
    assert np.isfinite(c) and c > 0


def test_rmax_must_exceed_range(barrier):
    with pytest.raises(DomainError):
        solve_zero_energy(barrier, 1.0)


def test_negative_potential_rejected():
    with pytest.raises(DomainError):
        square_barrier(-30.0, 1.0)


def test_refinement_converges(barrier):
    coarse = solve_zero_energy(barrier, 3.0, 2e-3).a
    fine = solve_zero_energy(barrier, 3.0, 1e-3).a
    assert abs(coarse - fine) / fine < 1e-9


def test_exterior_slope_is_one(barrier_solution):
    r = np.linspace(1.1, 3.0, 20)
    u = barrier_solution.u_at(r)
    assert np.allclose(np.diff(u) / np.diff(r), 1.0, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(v0=st.floats(0.1, 8.0), dv=st.floats(0.01, 2.0))
def test_scattering_length_increases_with_height(v0, dv):
    lo = solve_zero_energy(square_barrier(v0, 1.0), 3.0).a
    hi = solve_zero_energy(square_barrier(v0 + dv, 1.0), 3.0).a
    assert hi > lo
    k = math.sqrt(v0 / 2)
    assert lo == pytest.approx(1 - math.tanh(k) / k, rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(v0=st.floats(0.1, 6.0), p=st.floats(0.05, 60.0))
def test_fourier_bound_property(v0, p):
    sol = solve_zero_energy(ramp(v0, 1.0), 3.0)
    assert abs(w_fourier(sol, p)) * p ** 2 <= FOUR_PI * sol.a * (1 + 1e-12)
