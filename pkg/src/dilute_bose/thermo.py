"""Ideal Bose gas in the thermodynamic limit and on a finite mode set.

Two independent routes are kept side by side: adaptive radial quadrature of
the Bose integrals, and the polylogarithm series
Li_s(z) = sum_k z^k k^-s with an Euler-Maclaurin tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .tolerances import DEFAULT

Method = Literal["series", "quad"]

_BERNOULLI = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0)


def _upper_gamma_nonpositive(a: float, x: float) -> float:
    """Gamma(a, x) for half-integer or integer a via the downward recursion."""
    two_a = 2 * a
    if abs(two_a - round(two_a)) > 1e-12:
        raise DomainError("incomplete gamma only implemented for half-integer orders")
    if a > 0.5:
        raise DomainError("order above 1/2 not needed here")
    if abs(a - round(a)) < 1e-12:
        base_a, base = 0.0, float(special.exp1(x))
    else:
        base_a, base = 0.5, math.sqrt(math.pi) * float(special.erfc(math.sqrt(x)))
    # climb down from base_a to a: Gamma(b, x) = (Gamma(b+1, x) - x^b e^-x) / b
    b, val = base_a, base
    while b > a + 1e-12:
        b -= 1.0
        val = (val - x ** b * math.exp(-x)) / b
    return val


def _term_derivative(n: int, k: float, t: float, s: float) -> float:
    """n-th derivative of e^{-t k} k^{-s} with respect to k."""
    total = 0.0
    falling = 1.0
    for j in range(n + 1):
        if j > 0:
            falling *= (-s - (j - 1))
        total += math.comb(n, j) * (-t) ** (n - j) * falling * k ** (-s - j)
    return math.exp(-t * k) * total


def polylog(s: float, z: float, head: int = 64) -> float:
    """Li_s(z) for 0 <= z <= 1 and s > 1 a half-integer or integer.

    Direct sum of the first ``head - 1`` terms; the remainder is the
    Euler-Maclaurin tail with the exact integral t^{s-1} Gamma(1-s, tK).
    """
    if not 0.0 <= z <= 1.0:
        raise DomainError("polylog implemented for 0 <= z <= 1")
    if s <= 1.0:
        raise DomainError("polylog requires s > 1")
    if z == 0.0:
        return 0.0
    t = -math.log(z)
    K = head
    k = np.arange(1, K, dtype=float)
    direct = float(np.sum(np.exp(-t * k) * k ** (-s)))
    if t * K > 700:
        return direct
    if t == 0.0:
        integral = K ** (1.0 - s) / (s - 1.0)
    else:
        integral = t ** (s - 1.0) * _upper_gamma_nonpositive(1.0 - s, t * K)
    tail = integral + 0.5 * math.exp(-t * K) * K ** (-s)
    for j, b in enumerate(_BERNOULLI, start=1):
        tail -= b / math.factorial(2 * j) * _term_derivative(2 * j - 1, K, t, s)
    return direct + tail


def zeta(s: float) -> float:
    return polylog(s, 1.0)


def _thermal_volume(beta: float) -> float:
    return (4.0 * math.pi * beta) ** 1.5


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise DomainError("beta must be positive")


def critical_density(beta: float) -> float:
    """rho_c = zeta(3/2) (4 pi beta)^{-3/2}."""
    _check_beta(beta)
    return zeta(1.5) / _thermal_volume(beta)


def log1mexp(x: float) -> float:
    """ln(1 - e^{-x}) for x > 0, accurate at both ends."""
    return math.log1p(-math.exp(-x)) if x > math.log(2.0) else math.log(-math.expm1(-x))


def _p_cut(beta: float, mu: float) -> float:
    return math.sqrt(80.0 / beta)


def density_quad(mu: float, beta: float) -> float:
    """(2 pi)^-3 int d^3p / (e^{beta(p^2 - mu)} - 1) by adaptive quadrature."""
    _check_beta(beta)

    def f(p):
        x = beta * (p * p - mu)
        return p * p / math.expm1(x) if x > 0 else 1.0 / beta

    scale = 1.0 / math.sqrt(beta)
    pts = [scale * c for c in (0.25, 1.0, 2.0)]
    val, _ = integrate.quad(f, 0.0, _p_cut(beta, mu), points=pts, epsabs=0.0, epsrel=1e-12, limit=500)
    return val / (2.0 * math.pi ** 2)


def density_series(mu: float, beta: float) -> float:
    _check_beta(beta)
    if mu > 0:
        raise DomainError("chemical potential must be nonpositive")
    return polylog(1.5, math.exp(beta * mu)) / _thermal_volume(beta)


def pressure_quad(mu: float, beta: float) -> float:
    """-(2 pi)^-3 beta^-1 int ln(1 - e^{-beta(p^2 - mu)}) d^3p."""

    # p = v^2 tames the logarithmic endpoint at mu = 0
    def f(v):
        p2 = v ** 4
        x = beta * (p2 - mu)
        return -2.0 * v * p2 * log1mexp(x) if x > 0 else 0.0

    scale = beta ** -0.25
    pts = [scale * c for c in (0.5, 1.0, 1.5)]
    val, _ = integrate.quad(f, 0.0, math.sqrt(_p_cut(beta, mu)), points=pts, epsabs=0.0, epsrel=1e-12,
                            limit=500)
    return val / (2.0 * math.pi ** 2 * beta)


def pressure_series(mu: float, beta: float) -> float:
    return polylog(2.5, math.exp(beta * mu)) / (beta * _thermal_volume(beta))


_DENSITY = {"series": density_series, "quad": density_quad}
_PRESSURE = {"series": pressure_series, "quad": pressure_quad}


def _critical(beta: float, method: Method) -> float:
    return critical_density(beta) if method == "series" else density_quad(0.0, beta)


def chemical_potential(rho: float, beta: float, method: Method = "series", tol=DEFAULT) -> float:
    """mu(rho, beta): zero at or above rho_c, else the root of density(mu) = rho.

    Bisection on t with mu = -e^t; density decreases in t.
    """
    if not rho > 0:
        raise DomainError("density must be positive")
    _check_beta(beta)
    rho_c = _critical(beta, method)
    if rho >= rho_c:
        return 0.0
    density = _DENSITY[method]
    t_lo = -200.0
    t_hi = math.log(math.log(rho_c / rho) / beta + 1e-300) + 1.0
    t_hi = max(t_hi, t_lo + 1.0)
    for _ in range(tol.bisection_iters):
        if t_hi - t_lo < tol.bisection_width:
            break
        mid = 0.5 * (t_lo + t_hi)
        if density(-math.exp(mid), beta) > rho:
            t_lo = mid
        else:
            t_hi = mid
    return -math.exp(0.5 * (t_lo + t_hi))


def free_energy_density(rho: float, beta: float, method: Method = "series") -> float:
    """f_0 = rho mu - pressure(mu), with mu = 0 above rho_c."""
    mu = chemical_potential(rho, beta, method)
    return rho * mu - _PRESSURE[method](mu, beta)


@dataclass(frozen=True)
class ThermoPoint:
    rho: float
    beta: float
    mu: float
    rho_c: float
    f0: float
    regime: str


def thermo_point(rho: float, beta: float, method: Method = "series") -> ThermoPoint:
    rho_c = _critical(beta, method)
    mu = chemical_potential(rho, beta, method)
    f0 = rho * mu - _PRESSURE[method](mu, beta)
    regime = "above-critical" if rho >= rho_c else "below-critical"
    return ThermoPoint(rho, beta, mu, rho_c, f0, regime)


@dataclass(frozen=True)
class TemperatureSchedule:
    """beta(rho) = c rho^{-2/3}, with optional exact overrides at given densities."""

    c: float
    overrides: Mapping[float, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise DomainError("schedule coefficient must be positive")

    def beta(self, rho: float) -> float:
        if rho in self.overrides:
            return float(self.overrides[rho])
        return self.c * rho ** (-2.0 / 3.0)


def ratio_R(schedule: TemperatureSchedule | float) -> float:
    """Limiting rho_c / rho along the schedule: zeta(3/2) (4 pi)^{-3/2} c^{-3/2}."""
    c = schedule.c if isinstance(schedule, TemperatureSchedule) else float(schedule)
    if not c > 0:
        raise DomainError("schedule coefficient must be positive")
    return zeta(1.5) / (4.0 * math.pi) ** 1.5 * c ** -1.5


def delta_f_leading(a: float, rho: float, rho_c: float) -> float:
    """4 pi a (2 rho^2 - [rho - rho_c]_+^2)."""
    excess = rho - rho_c
    pos = excess if excess > 0 else 0.0
    return 4.0 * math.pi * a * (2.0 * rho * rho - pos * pos)


# --- finite mode sets ---------------------------------------------------------

@dataclass(frozen=True)
class LatticeSums:
    free_energy: float
    mean: np.ndarray
    log_partition: np.ndarray
    energies: np.ndarray


def mode_log_partition(beta_e: float, cap: int | None) -> tuple[float, float]:
    """(ln sum_{n<=C} e^{-beta E n}, mean n) for one mode."""
    if cap is None:
        if beta_e <= 0:
            raise DomainError("untruncated mode with beta*E <= 0 diverges")
        return -log1mexp(beta_e), 1.0 / math.expm1(beta_e)
    if cap < 0:
        raise DomainError("cutoff must be nonnegative")
    if beta_e == 0.0:
        return math.log(cap + 1.0), 0.5 * cap
    x = abs(beta_e)
    log_z = log1mexp(x * (cap + 1)) - log1mexp(x)
    if beta_e < 0:
        log_z += x * cap
    if beta_e * (cap + 1) > 700:
        mean = 1.0 / math.expm1(beta_e)
    else:
        mean = 1.0 / math.expm1(beta_e) - (cap + 1) / math.expm1(beta_e * (cap + 1))
    return log_z, mean


def lattice_ideal_sums(L: float, beta: float, mu: float, mode_set, cutoffs=None) -> LatticeSums:
    """Free energy and mean occupations of independent modes E = p^2 - mu.

    ``cutoffs`` caps each mode's occupation (None means untruncated). The free
    energy is -beta^-1 sum ln Z_k + mu sum <n_k>.
    """
    _check_beta(beta)
    modes = np.asarray(mode_set, dtype=float).reshape(-1, 3)
    energies = (2.0 * math.pi / L) ** 2 * np.sum(modes ** 2, axis=1) - mu
    caps = [None] * len(modes) if cutoffs is None else list(cutoffs)
    logs, means = [], []
    for e, c in zip(energies, caps):
        lz, mn = mode_log_partition(beta * e, None if c is None else int(c))
        logs.append(lz)
        means.append(mn)
    means_arr = np.asarray(means)
    logs_arr = np.asarray(logs)
    F = -float(np.sum(logs_arr)) / beta + mu * float(np.sum(means_arr))
    return LatticeSums(F, means_arr, logs_arr, energies)
