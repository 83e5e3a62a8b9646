"""Transfer of periodic states to a slightly larger box with vanishing boundary values.

A periodic function on [0, L]^3 is multiplied by the tensor-product profile
h(x) = q(x1) q(x2) q(x3), where q rises as a quarter cosine over [-ell, ell],
equals 1 in the middle and falls symmetrically over [L - ell, L + ell]. The
squares of overlapping images add to one, so the map is an isometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .errors import DomainError
from .fock import entropy_of_mixture
from .tolerances import DEFAULT

PENALTY_CONSTANT = 3.0 * math.pi ** 2 / 16.0
"""Constant that works for every periodic input (three coordinates in the layer at once)."""

CORPUS_CONSTANT = math.pi ** 2 / 8.0
"""Smaller constant adequate for the test corpus whenever L >= 3.2 ell."""

_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


@dataclass(frozen=True)
class BridgeProfile:
    L: float
    ell: float

    def __post_init__(self) -> None:
        if not (self.L > 0 and self.ell > 0):
            raise DomainError("L and ell must be positive")
        if 2.0 * self.ell > self.L:
            raise DomainError("margin ell must not exceed L/2")

    @property
    def slope(self) -> float:
        return math.pi / (4.0 * self.ell)

    def q(self, x):
        x = np.asarray(x, dtype=float)
        L, ell, k = self.L, self.ell, self.slope
        out = np.zeros_like(x)
        left = np.abs(x) <= ell
        right = np.abs(x - L) <= ell
        mid = (x > ell) & (x < L - ell)
        out = np.where(left, np.cos((x - ell) * k), out)
        out = np.where(right, np.cos((x - (L - ell)) * k), out)
        return np.where(mid, 1.0, out)

    def dq(self, x):
        x = np.asarray(x, dtype=float)
        L, ell, k = self.L, self.ell, self.slope
        out = np.zeros_like(x)
        out = np.where(np.abs(x) <= ell, -k * np.sin((x - ell) * k), out)
        return np.where(np.abs(x - L) <= ell, -k * np.sin((x - (L - ell)) * k), out)

    def h(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.prod(self.q(pts), axis=-1)

    def layer(self, x) -> np.ndarray:
        """1 where a point of the period cell lies within ell of the boundary (torus distance)."""
        y = np.mod(np.asarray(x, dtype=float), self.L)
        return ((y <= self.ell) | (y >= self.L - self.ell)).astype(float)

    def chi(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.max(self.layer(pts), axis=-1)

    def pieces(self) -> list[tuple[float, float]]:
        L, ell = self.L, self.ell
        return [(-ell, ell), (ell, L - ell), (L - ell, L + ell)]


def _nodes(pieces: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    xs, ws = [], []
    for a, b in pieces:
        if b > a:
            xs.append(0.5 * (b - a) * _GL_X + 0.5 * (a + b))
            ws.append(0.5 * (b - a) * _GL_W)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class TrigPolynomial:
    """phi(x) = sum_n c_n exp(2 pi i n.x / L) with integer frequency triples."""

    freqs: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def from_mapping(cls, terms: Mapping[tuple[int, int, int], complex]) -> "TrigPolynomial":
        keys = list(terms)
        return cls(np.array(keys, dtype=np.int64).reshape(-1, 3), np.array([terms[k] for k in keys], dtype=complex))

    @classmethod
    def random(cls, degree: int, n_terms: int, seed: int) -> "TrigPolynomial":
        rng = np.random.default_rng(seed)
        f = rng.integers(-degree, degree + 1, size=(n_terms, 3))
        f = np.unique(f, axis=0)
        c = rng.normal(size=len(f)) + 1j * rng.normal(size=len(f))
        return cls(f, c)

    def __post_init__(self) -> None:
        f = np.asarray(self.freqs)
        if f.ndim != 2 or f.shape[1] != 3:
            raise DomainError("frequencies must be integer triples")
        if not np.issubdtype(f.dtype, np.integer):
            if np.any(np.abs(f - np.round(f)) > 0):
                raise DomainError("non-integer frequency: the function is not L-periodic")

    @property
    def degree(self) -> int:
        return int(np.max(np.abs(self.freqs))) if len(self.freqs) else 0


def _phase_integrals(profile: BridgeProfile, d_max: int) -> dict[str, np.ndarray]:
    """int q^2 e^{i k d x}, int q q' e^{i k d x}, int q'^2 e^{i k d x} over [-ell, L + ell] for |d| <= d_max."""
    x, w = _nodes(profile.pieces())
    kappa = 2.0 * math.pi / profile.L
    d = np.arange(-d_max, d_max + 1)
    ph = np.exp(1j * kappa * np.outer(d, x))
    q, dq = profile.q(x), profile.dq(x)
    return {"A0": ph @ (w * q * q), "A1": ph @ (w * q * dq), "A2": ph @ (w * dq * dq), "offset": d_max}


def _inner_integral(profile: BridgeProfile, d: np.ndarray) -> np.ndarray:
    """int_ell^{L-ell} e^{i k d x} dx in closed form."""
    kappa = 2.0 * math.pi / profile.L
    a, b = profile.ell, profile.L - profile.ell
    out = np.empty(d.shape, dtype=complex)
    zero = d == 0
    out[zero] = b - a
    dd = d[~zero]
    out[~zero] = (np.exp(1j * kappa * dd * b) - np.exp(1j * kappa * dd * a)) / (1j * kappa * dd)
    return out


@dataclass(frozen=True)
class IsometryResult:
    norm_in: float
    norm_out: float

    @property
    def defect(self) -> float:
        return abs(self.norm_out - self.norm_in) / max(abs(self.norm_in), 1e-300)


def isometry_check(profile: BridgeProfile, phi: TrigPolynomial) -> IsometryResult:
    """int |h phi|^2 over [-ell, L+ell]^3 against int |phi|^2 over [0, L]^3."""
    f, c = phi.freqs, phi.coeffs
    tab = _phase_integrals(profile, 2 * max(phi.degree, 1))
    off = tab["offset"]
    diff = f[None, :, :] - f[:, None, :]
    A0 = tab["A0"][diff + off]
    out = np.einsum("n,m,nm->", c.conj(), c, np.prod(A0, axis=-1)).real
    norm_in = profile.L ** 3 * float(np.sum(np.abs(c) ** 2))
    return IsometryResult(norm_in, float(out))


@dataclass(frozen=True)
class PenaltyResult:
    lhs: float
    gradient: float
    boundary_mass: float
    ell: float
    constant: float

    @property
    def penalty(self) -> float:
        return self.constant * self.boundary_mass / self.ell ** 2

    @property
    def rhs(self) -> float:
        return self.gradient + self.penalty

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def needed_constant(self) -> float:
        """Smallest C for which this input satisfies the inequality."""
        if self.boundary_mass == 0.0:
            return 0.0
        return max(0.0, (self.lhs - self.gradient) * self.ell ** 2 / self.boundary_mass)


def kinetic_penalty(profile: BridgeProfile, phi: TrigPolynomial, constant: float = PENALTY_CONSTANT) -> PenaltyResult:
    """int |grad(h phi)|^2 against int |grad phi|^2 + C ell^-2 int chi |phi|^2."""
    f, c = phi.freqs, phi.coeffs
    tab = _phase_integrals(profile, 2 * max(phi.degree, 1))
    off = tab["offset"]
    kappa = 2.0 * math.pi / profile.L
    diff = f[None, :, :] - f[:, None, :]
    A0, A1, A2 = (tab[k][diff + off] for k in ("A0", "A1", "A2"))
    total = np.zeros(diff.shape[:2], dtype=complex)
    for ax in range(3):
        others = np.prod(np.delete(A0, ax, axis=-1), axis=-1)
        n_ax = f[:, ax][:, None].astype(float)
        m_ax = f[:, ax][None, :].astype(float)
        along = (A2[..., ax] + 1j * kappa * (m_ax - n_ax) * A1[..., ax]
                 + kappa ** 2 * n_ax * m_ax * A0[..., ax])
        total += along * others
    lhs = float(np.einsum("n,m,nm->", c.conj(), c, total).real)
    grad = profile.L ** 3 * kappa ** 2 * float(np.sum(np.abs(c) ** 2 * np.sum(f.astype(float) ** 2, axis=1)))
    inner = np.prod(_inner_integral(profile, diff), axis=-1)
    full = profile.L ** 3 * float(np.sum(np.abs(c) ** 2))
    mass = full - float(np.einsum("n,m,nm->", c.conj(), c, inner).real)
    return PenaltyResult(lhs, grad, mass, profile.ell, constant)


@dataclass(frozen=True)
class Rescale:
    L_star: float
    rho_star: float
    factor: float
    conservation_residual: float


def box_rescale(L: float, rho: float, digits: int = 50) -> Rescale:
    """|Lambda*| = |Lambda| (1 + 2 rho^{41/120})^3 and rho* = rho / (same factor), in extended precision."""
    if not rho > 0:
        raise DomainError("density must be positive")
    if not L > 0:
        raise DomainError("box side must be positive")
    with mpmath.workdps(digits):
        r = mpmath.mpf(rho)
        side = mpmath.mpf(L)
        stretch = 1 + 2 * r ** (mpmath.mpf(41) / 120)
        factor = stretch ** 3
        vol_star = side ** 3 * factor
        rho_star = r / factor
        resid = abs(rho_star * vol_star - r * side ** 3) / (r * side ** 3)
        return Rescale(float(side * stretch), float(rho_star), float(factor), float(resid))


# --- discrete one-dimensional stand-in ----------------------------------------

@dataclass(frozen=True)
class GridBridge:
    """Bridge map from n periodic grid points to n + 2k points on [-ell, L + ell)."""

    profile: BridgeProfile
    n: int

    @property
    def dx(self) -> float:
        return self.profile.L / self.n

    @property
    def k(self) -> int:
        k = self.profile.ell / self.dx
        if abs(k - round(k)) > 1e-9:
            raise DomainError("ell must be a whole number of grid steps")
        return int(round(k))

    def matrix(self) -> np.ndarray:
        k, n = self.k, self.n
        j = np.arange(-k, n + k)
        B = np.zeros((len(j), n))
        B[np.arange(len(j)), np.mod(j, n)] = self.profile.q(j * self.dx)
        return B

    def apply(self, states: np.ndarray) -> np.ndarray:
        """Map each row (a periodic grid function) to the enlarged grid."""
        return np.atleast_2d(states) @ self.matrix().T


@dataclass(frozen=True)
class EntropyTransfer:
    before: float
    after: float
    spectrum_defect: float
    weights_unchanged: bool

    @property
    def holds(self) -> bool:
        return self.spectrum_defect < DEFAULT.isometry and abs(self.after - self.before) < DEFAULT.isometry


def _spectrum(weights: np.ndarray, states: np.ndarray) -> np.ndarray:
    sq = np.sqrt(weights)
    gram = states.conj() @ states.T
    return np.sort(np.linalg.eigvalsh(sq[:, None] * gram * sq[None, :]))


def entropy_transfer_check(weights: Sequence[float], states: np.ndarray, bridge: GridBridge) -> EntropyTransfer:
    """Apply the bridge to every pure state and compare mixture spectra and entropies."""
    g = np.asarray(weights, dtype=float)
    psi = np.atleast_2d(np.asarray(states))
    mapped = bridge.apply(psi)
    g_before = g.copy()
    s0 = entropy_of_mixture(g, psi)
    s1 = entropy_of_mixture(g, mapped)
    defect = float(np.max(np.abs(_spectrum(g, psi) - _spectrum(g, mapped))))
    return EntropyTransfer(s0, s1, defect, bool(np.array_equal(g, g_before)))


@dataclass(frozen=True)
class ShiftScan:
    shifts: np.ndarray
    boundary_weight: np.ndarray
    best_shift: float
    best_weight: float
    average: float


def shift_scan(density: np.ndarray, profile: BridgeProfile, n_shifts: int | None = None) -> ShiftScan:
    """Boundary-layer weight sum_x n(x) chi(x + u) for grid shifts u; returns the minimising u.

    ``density`` is a nonnegative one-particle density on a uniform periodic
    grid over [0, L). The average over all shifts equals (2 ell / L) times the
    total, so the minimum never exceeds it.
    """
    n = np.asarray(density, dtype=float)
    if np.any(n < 0):
        raise DomainError("density must be nonnegative")
    m = len(n)
    x = profile.L * np.arange(m) / m
    count = m if n_shifts is None else int(n_shifts)
    step = max(1, m // count)
    idx = np.arange(0, m, step)
    shifts = x[idx]
    layer = profile.layer(x)
    weights = np.array([float(np.sum(n * np.roll(layer, -int(s)))) for s in idx])
    j = int(np.argmin(weights))
    avg_all = float(np.mean([np.sum(n * np.roll(layer, -s)) for s in range(m)]))
    return ShiftScan(shifts, weights, float(shifts[j]), float(weights[j]), avg_all)
