"""Spherically symmetric pair potentials and their smooth majorants.

A potential is stored as a list of polynomial pieces on consecutive radial
intervals, so every quadrature can split exactly at the breakpoints.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, signal

from .errors import DomainError, QuadratureError
from .tolerances import DEFAULT

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class RadialPotential:
    """Piecewise polynomial V(r) >= 0 on [0, R0], zero beyond.

    ``coeffs[i]`` holds ascending powers of the local variable ``r - breaks[i]``.
    """

    breaks: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]
    name: str = "potential"
    sup_norm: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        if len(self.breaks) != len(self.coeffs) + 1:
            raise DomainError("need one more breakpoint than pieces")
        b = np.asarray(self.breaks, dtype=float)
        if b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must start at 0 and increase")
        samples = self._sample_values()
        if samples.size and samples.min() < -1e-14:
            raise DomainError("potential must be nonnegative")
        sup = float(samples.max()) if samples.size else 0.0
        object.__setattr__(self, "_mat", self._coeff_matrix())
        if math.isnan(self.sup_norm):
            object.__setattr__(self, "sup_norm", sup)
        elif sup > self.sup_norm * (1 + 1e-12) + 1e-300:
            raise DomainError("sampled values exceed the declared sup norm")

    @property
    def range(self) -> float:
        return float(self.breaks[-1]) if self.coeffs else 0.0

    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    @property
    def is_zero(self) -> bool:
        return all(all(c == 0.0 for c in piece) for piece in self.coeffs)

    def _coeff_matrix(self) -> np.ndarray:
        deg = max((len(c) for c in self.coeffs), default=1)
        mat = np.zeros((len(self.coeffs), deg))
        for i, c in enumerate(self.coeffs):
            mat[i, : len(c)] = c
        return mat

    def piece_value(self, i: int, r: np.ndarray | float) -> np.ndarray:
        """Evaluate piece ``i``'s polynomial at r (one-sided values at breaks)."""
        x = np.asarray(r, dtype=float) - self.breaks[i]
        out = np.zeros_like(x)
        for c in reversed(self.coeffs[i]):
            out = out * x + c
        return out

    def _sample_values(self, per_piece: int = 17) -> np.ndarray:
        vals = []
        for i in range(len(self.coeffs)):
            r = np.linspace(self.breaks[i], self.breaks[i + 1], per_piece)
            vals.append(self.piece_value(i, r))
        return np.concatenate(vals) if vals else np.zeros(0)


def square_barrier(V0: float, R0: float) -> RadialPotential:
    return RadialPotential((0.0, float(R0)), ((float(V0),),), name="square")


def ramp(V0: float, R0: float) -> RadialPotential:
    """Linear ramp V0 (1 - r/R0) on [0, R0]."""
    return RadialPotential((0.0, float(R0)), ((float(V0), -float(V0) / R0),), name="ramp")


def zero_potential() -> RadialPotential:
    return RadialPotential((0.0, 1.0), ((0.0,),), name="zero")


def table_potential(r: Sequence[float], values: Sequence[float], name: str = "table") -> RadialPotential:
    """Piecewise linear interpolation of samples (r_i, V_i), r_0 = 0."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or r.size < 2:
        raise DomainError("table needs matching 1D arrays with at least two rows")
    if r[0] != 0.0:
        raise DomainError("table must start at r = 0")
    slopes = np.diff(v) / np.diff(r)
    coeffs = tuple((float(a), float(s)) for a, s in zip(v[:-1], slopes))
    return RadialPotential(tuple(float(x) for x in r), coeffs, name=name)


def read_table_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header
    arr = np.array(rows, dtype=float)
    return arr[:, 0], arr[:, 1]


def evaluate(potential: RadialPotential, r: np.ndarray | float) -> np.ndarray | float:
    """V(r); zero beyond the range, closed at R0."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("radius must be nonnegative")
    breaks = np.asarray(potential.breaks)
    idx = np.clip(np.searchsorted(breaks, r_arr, side="right") - 1, 0, potential.n_pieces - 1)
    mat = potential._mat
    x = r_arr - breaks[idx]
    out = np.zeros_like(r_arr)
    for k in range(mat.shape[1] - 1, -1, -1):
        out = out * x + mat[idx, k]
    out = np.where(r_arr <= potential.range, out, 0.0)
    return float(out) if np.ndim(r) == 0 else out


def _gauss_radial(potential: RadialPotential, weight, n_nodes: int) -> float:
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    b = np.asarray(potential.breaks)
    lo, hi = b[:-1, None], b[1:, None]
    r = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
    vals = np.vstack([potential.piece_value(i, r[i]) for i in range(potential.n_pieces)])
    return float(np.sum(0.5 * (hi - lo) * w[None, :] * vals * weight(r)))


def radial_integral(potential: RadialPotential, weight, tol: float = DEFAULT.quad_rel) -> float:
    """4 pi int r^2 V(r) weight(r) dr, split at every breakpoint."""
    if potential.is_zero:
        return 0.0
    if potential.n_pieces > 64:
        return FOUR_PI * _gauss_radial(potential, lambda r: r * r * weight(r), 24)
    total, err_total = 0.0, 0.0
    scale = FOUR_PI * potential.sup_norm * potential.range ** 3
    for i in range(potential.n_pieces):
        lo, hi = potential.breaks[i], potential.breaks[i + 1]
        val, err = integrate.quad(
            lambda r: r * r * float(potential.piece_value(i, r)) * weight(r),
            lo, hi, epsabs=tol * scale / (FOUR_PI * potential.n_pieces), epsrel=tol, limit=400,
        )
        total += val
        err_total += err
    if FOUR_PI * err_total > tol * max(abs(FOUR_PI * total), scale):
        raise QuadratureError("radial quadrature did not converge", FOUR_PI * err_total)
    return FOUR_PI * total


def fourier_hat(potential: RadialPotential, p: np.ndarray | float, tol: float = DEFAULT.quad_rel):
    """Radial Fourier transform 4 pi int r^2 V(r) sinc(pr) dr."""
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p_arr < 0):
        raise DomainError("wavenumber magnitude must be nonnegative")
    out = np.empty_like(p_arr)
    for j, pj in enumerate(p_arr):
        if potential.n_pieces > 64:
            n_nodes = 12 + int(math.ceil(pj * max(np.diff(potential.breaks))))
            out[j] = FOUR_PI * _gauss_radial(potential, lambda r, pj=pj: r * r * np.sinc(pj * r / math.pi), n_nodes)
        else:
            out[j] = radial_integral(potential, lambda r, pj=pj: np.sinc(pj * r / math.pi), tol)
    return float(out[0]) if np.ndim(p) == 0 else out


# --- mollifier ---------------------------------------------------------------

PLATEAU_RADIUS = 1.5
SUPPORT_RADIUS = 2.0


def _psi(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def bump_shape(r: np.ndarray | float) -> np.ndarray:
    """Smooth profile equal to 1 on r <= 1.5 and 0 on r >= 2 (g / g(0))."""
    t = (SUPPORT_RADIUS - np.asarray(r, dtype=float)) / (SUPPORT_RADIUS - PLATEAU_RADIUS)
    a, b = _psi(t), _psi(1.0 - t)
    return a / (a + b)


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    # composite Gauss-Legendre on the transition layer; the integrand is smooth
    t = np.linspace(PLATEAU_RADIUS, SUPPORT_RADIUS, 2001)
    x, w = np.polynomial.legendre.leggauss(12)
    lo, hi = t[:-1, None], t[1:, None]
    s = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    outer = float(np.sum(0.5 * (hi - lo) * w * s * s * bump_shape(s)))
    return FOUR_PI * (PLATEAU_RADIUS ** 3 / 3.0 + outer)


@lru_cache(maxsize=None)
def _first_moment_table(n: int = 4001) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative int_0^t s * shape(s) ds on the transition layer [1.5, 2]."""
    t = np.linspace(PLATEAU_RADIUS, SUPPORT_RADIUS, n)
    x, w = np.polynomial.legendre.leggauss(12)
    lo, hi = t[:-1, None], t[1:, None]
    s = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    cells = np.sum(0.5 * (hi - lo) * w * s * bump_shape(s), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(cells)]) + 0.5 * PLATEAU_RADIUS ** 2
    return t, cum


@dataclass(frozen=True)
class MollifierSpec:
    m: int
    plateau: float

    def value(self, r: np.ndarray | float) -> np.ndarray:
        """g_m(r) = m^3 g(m r)."""
        return self.m ** 3 * self.plateau * bump_shape(self.m * np.asarray(r, dtype=float))

    def first_moment(self, t: np.ndarray) -> np.ndarray:
        """G_m(t) = int_0^t s g_m(s) ds, evaluated by cubic Hermite on a fine table."""
        u = self.m * np.abs(np.asarray(t, dtype=float))
        grid, cum = _first_moment_table()
        deriv = grid * bump_shape(grid)
        inner = 0.5 * np.minimum(u, PLATEAU_RADIUS) ** 2
        from scipy.interpolate import CubicHermiteSpline

        spline = CubicHermiteSpline(grid, cum, deriv)
        layer = spline(np.clip(u, PLATEAU_RADIUS, SUPPORT_RADIUS))
        out = np.where(u <= PLATEAU_RADIUS, inner, layer)
        return self.m * self.plateau * out

    def l1_norm(self) -> float:
        val, _ = integrate.quad(lambda r: r * r * float(self.value(r)), 0.0, SUPPORT_RADIUS / self.m,
                                points=[PLATEAU_RADIUS / self.m], epsabs=1e-14, epsrel=1e-13)
        return FOUR_PI * val


def mollifier(m: int) -> MollifierSpec:
    if int(m) != m or m < 1:
        raise DomainError("mollifier scale m must be a positive integer")
    return MollifierSpec(int(m), 1.0 / _bump_mass())


@dataclass(frozen=True)
class MajorantResult:
    potential: RadialPotential
    l1_distance: float
    grid: np.ndarray
    envelope: np.ndarray
    smoothed: np.ndarray
    shift: float
    support_radius: float
    spec: MollifierSpec


def lipschitz_envelope(f: RadialPotential, grid: np.ndarray, width: float) -> np.ndarray:
    """Continuous majorant of f on a uniform grid with slope sup|f| / width.

    Node values dominate f on both adjacent cells, so the linear interpolant
    dominates f everywhere; a forward and a backward pass then impose the slope.
    """
    h = grid[1] - grid[0]
    interior = np.linspace(0.0, 1.0, 7)
    pts = grid[:-1, None] + h * interior[None, :]
    cell_max = np.max(np.where(pts <= f.range, evaluate(f, np.minimum(pts, f.range)), 0.0), axis=1)
    # one-sided limits at breakpoints fold into both neighbouring cells
    for i, b in enumerate(f.breaks):
        j = int(np.clip(np.floor(b / h), 0, len(cell_max) - 1))
        vals = []
        if i > 0:
            vals.append(float(f.piece_value(i - 1, b)))
        if i < f.n_pieces:
            vals.append(float(f.piece_value(i, b)))
        for jj in (j - 1, j, j + 1):
            if 0 <= jj < len(cell_max) and grid[jj] <= b <= grid[jj + 1]:
                cell_max[jj] = max(cell_max[jj], *vals)
    node = np.zeros_like(grid)
    node[:-1] = cell_max
    node[1:] = np.maximum(node[1:], cell_max)
    slope_step = f.sup_norm / width * h
    for i in range(1, len(node)):
        node[i] = max(node[i], node[i - 1] - slope_step)
    for i in range(len(node) - 2, -1, -1):
        node[i] = max(node[i], node[i + 1] - slope_step)
    return node


def radial_convolution(values: np.ndarray, grid: np.ndarray, spec: MollifierSpec) -> np.ndarray:
    """3D convolution of a radial grid function with g_m, returned on the same grid.

    Uses (f*g)(r) = (2 pi / r) int_0^inf s f(s) [G(r+s) - G(|r-s|)] ds with
    G(t) = int_0^t s g_m(s) ds, rewritten as a 1D convolution of the odd
    extension of s f(s) with the even, compactly supported G(|t|) - G(inf).
    """
    h = grid[1] - grid[0]
    n = len(grid)
    x = np.arange(-(n - 1), n) * h
    phi = x * np.concatenate([values[:0:-1], values])
    k_half = int(math.ceil(SUPPORT_RADIUS / spec.m / h)) + 1
    t = np.arange(-k_half, k_half + 1) * h
    kernel = spec.first_moment(t) - spec.first_moment(SUPPORT_RADIUS / spec.m)
    conv = signal.fftconvolve(phi, kernel, mode="same") * h
    conv = conv[n - 1:]
    out = np.empty(n)
    out[1:] = -2.0 * math.pi * conv[1:] / grid[1:]
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    out[0] = FOUR_PI * np.sum(w * grid ** 2 * values * spec.value(grid))
    return np.maximum(out, 0.0)


def _integral_r2_linear(grid: np.ndarray, values: np.ndarray) -> float:
    """Exact int r^2 F(r) dr for the linear interpolant of node values."""
    a, b = grid[:-1], grid[1:]
    fa, fb = values[:-1], values[1:]
    slope = (fb - fa) / (b - a)
    c0 = fa - slope * a
    return float(np.sum(c0 * (b ** 3 - a ** 3) / 3.0 + slope * (b ** 4 - a ** 4) / 4.0))


def mollified_majorant(f: RadialPotential, n: int, m: int, step: float = 1e-4) -> MajorantResult:
    """Smooth majorant F = f_n * g_m + ||f_n * g_m - f_n||_inf g / g(0).

    f_n is the Lipschitz envelope of f with transition width 1/(2n); F is
    returned as a finely tabulated potential.
    """
    if n < 1 or m < 1:
        raise DomainError("n and m must be at least 1")
    if f.range > 1.0 + 1e-12 and not f.is_zero:
        raise DomainError("f must be supported in the unit ball")
    spec = mollifier(m)
    width = 1.0 / (2 * n)
    reach = max(SUPPORT_RADIUS, f.range + width + SUPPORT_RADIUS / m)
    n_cells = int(math.ceil(reach / step - 1e-9))
    grid = np.arange(n_cells + 1) * step
    if f.is_zero:
        zero = np.zeros_like(grid)
        return MajorantResult(zero_potential(), 0.0, grid, zero, zero, 0.0, 0.0, spec)
    env = lipschitz_envelope(f, grid, width)
    smooth = radial_convolution(env, grid, spec)
    shift = float(np.max(np.abs(smooth - env)))
    values = smooth + shift * bump_shape(grid)
    nz = np.nonzero(values > 0)[0]
    last = min(int(nz[-1]) + 1, len(grid) - 1)
    F = table_potential(grid[: last + 1], values[: last + 1], name=f"majorant({f.name},n={n},m={m})")
    l1 = FOUR_PI * _integral_r2_linear(grid[: last + 1], values[: last + 1]) - radial_integral(f, lambda r: 1.0)
    return MajorantResult(F, float(l1), grid, env, smooth, shift, float(grid[last]), spec)


def second_difference_bound(result: MajorantResult) -> float:
    """max |F(r+h) - 2F(r) + F(r-h)| / h^2 on the tabulation grid."""
    v = evaluate(result.potential, result.grid)
    h = result.grid[1] - result.grid[0]
    return float(np.max(np.abs(np.diff(v, 2))) / h ** 2)
