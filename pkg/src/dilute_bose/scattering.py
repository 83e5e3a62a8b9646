"""Zero-energy scattering solution for a finite-range radial potential.

With u(r) = r (1 - w(r)) the radial equation reads u'' = V u / 2, u(0) = 0.
Beyond the range u is affine; normalising its slope to one gives u = r - a.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, InvalidPotentialError
from .potentials import FOUR_PI, RadialPotential
from .tolerances import DEFAULT

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _series_coefficients(poly: tuple[float, ...], order: int) -> np.ndarray:
    """Taylor coefficients of the regular solution u = r + ... near r = 0."""
    c = np.zeros(order + 1)
    c[1] = 1.0
    half = 0.5 * np.asarray(poly, dtype=float)
    for n in range(order - 1):
        acc = sum(half[k] * c[n - k] for k in range(len(half)) if n - k >= 0)
        c[n + 2] = acc / ((n + 2) * (n + 1))
    return c


def _rk4_matrices(c0: np.ndarray, cm: np.ndarray, c1: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step of (u, u')' = [[0, 1], [c, 0]] (u, u') as a 2x2 matrix per step."""
    n = len(c0)
    eye = np.broadcast_to(np.eye(2), (n, 2, 2))

    def gen(c):
        g = np.zeros((n, 2, 2))
        g[:, 0, 1] = 1.0
        g[:, 1, 0] = c
        return g

    a0, am, a1 = gen(c0), gen(cm), gen(c1)
    k1 = a0
    k2 = am @ (eye + 0.5 * h * k1)
    k3 = am @ (eye + 0.5 * h * k2)
    k4 = a1 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class ScatteringSolution:
    a: float
    nodes: np.ndarray
    u: np.ndarray
    du: np.ndarray
    half_v: np.ndarray
    range: float
    r_max: float
    step: float
    residual: float
    potential: RadialPotential = field(repr=False)

    def __post_init__(self) -> None:
        spline = CubicHermiteSpline(self.nodes, self.u, self.du) if len(self.nodes) > 1 else None
        object.__setattr__(self, "_spline", spline)
        # Gauss nodes per step cell for every transform of the compact source V(1-w)/2
        lo, hi = self.nodes[:-1, None], self.nodes[1:, None]
        r = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
        wts = 0.5 * (hi - lo) * _GL_W
        cell_piece = np.clip(np.searchsorted(self.potential.breaks, 0.5 * (lo[:, 0] + hi[:, 0]), side="right") - 1,
                             0, self.potential.n_pieces - 1)
        hv = np.zeros_like(r)
        for i in np.unique(cell_piece):
            rows = cell_piece == i
            hv[rows] = 0.5 * self.potential.piece_value(int(i), r[rows])
        uq = spline(r) if spline is not None else np.zeros_like(r)
        duq = spline.derivative()(r) if spline is not None else np.zeros_like(r)
        object.__setattr__(self, "_quad", (r.ravel(), wts.ravel(), hv.ravel(), uq.ravel(), duq.ravel()))

    def u_at(self, r: np.ndarray | float) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, 0.0, self.range)
        val = self._spline(inside) if self._spline is not None else inside
        return np.where(r <= self.range, val, r - self.a)

    def w(self, r: np.ndarray | float) -> np.ndarray | float:
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0):
            raise DomainError("radius must be nonnegative")
        safe = np.where(r_arr > 0, r_arr, 1.0)
        out = np.where(r_arr > 0, 1.0 - self.u_at(safe) / safe, 1.0 - self.du[0])
        return float(out) if np.ndim(r) == 0 else out

    def profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Tabulated (r, w) on [0, r_max] at the solver step."""
        n_out = int(math.ceil((self.r_max - self.range) / self.step))
        outer = self.range + self.step * np.arange(1, n_out + 1)
        r = np.concatenate([self.nodes, outer[outer <= self.r_max + 1e-12]])
        return r, np.asarray(self.w(r))

    def g_hat(self, p: np.ndarray | float) -> np.ndarray | float:
        """4 pi int r^2 (V(1-w)/2)(r) sinc(pr) dr = (4 pi / p) int (V u / 2) sin(pr) dr."""
        r, wts, hv, uq, _ = self._quad
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        src = wts * hv * uq
        out = np.empty_like(p_arr)
        flat = p_arr.ravel()
        res = out.reshape(-1)
        for lo in range(0, flat.size, 256):
            pj = flat[lo:lo + 256]
            safe = np.where(pj == 0.0, 1.0, pj)
            sums = np.sin(np.outer(safe, r)) @ src / safe
            res[lo:lo + 256] = FOUR_PI * np.where(pj == 0.0, np.sum(src * r), sums)
        return float(out[0]) if np.ndim(p) == 0 else out


def solve_zero_energy(potential: RadialPotential, r_max: float, step: float = 1e-3,
                      tol=DEFAULT) -> ScatteringSolution:
    """Integrate u'' = V u / 2 by classical RK4, piece by piece.

    Each potential piece is covered by an integer number of equal steps so the
    breakpoints fall on nodes. The first step uses the exact power series of
    the regular solution. The residual is the largest step-doubling estimate
    of the local error.
    """
    R0 = potential.range
    if r_max <= R0:
        raise DomainError("r_max must exceed the potential range")
    if R0 / step < 200 - 1e-9:
        raise DomainError("step too coarse: need at least 200 steps across the range")
    if potential.is_zero:
        nodes = np.linspace(0.0, R0, int(math.ceil(R0 / step)) + 1)
        return ScatteringSolution(0.0, nodes, nodes.copy(), np.ones_like(nodes), np.zeros_like(nodes),
                                  R0, r_max, step, 0.0, potential)

    nodes, us, dus, hvs = [0.0], [0.0], [1.0], [0.5 * float(potential.piece_value(0, 0.0))]
    residual = 0.0
    y = np.array([0.0, 1.0])
    for i in range(potential.n_pieces):
        lo, hi = potential.breaks[i], potential.breaks[i + 1]
        n_steps = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
        h = (hi - lo) / n_steps
        r0 = lo + h * np.arange(n_steps)

        def coef(x, i=i):
            return 0.5 * np.asarray(potential.piece_value(i, x), dtype=float)

        full = _rk4_matrices(coef(r0), coef(r0 + 0.5 * h), coef(r0 + h), h)
        first = _rk4_matrices(coef(r0), coef(r0 + 0.25 * h), coef(r0 + 0.5 * h), 0.5 * h)
        second = _rk4_matrices(coef(r0 + 0.5 * h), coef(r0 + 0.75 * h), coef(r0 + h), 0.5 * h)
        start = 0
        ys = np.empty((n_steps + 1, 2))
        ys[0] = y
        if lo == 0.0:
            # exact power series of the regular solution for the first step
            c = _series_coefficients(potential.coeffs[0], 16)
            powers = h ** np.arange(17)
            ys[1] = [np.dot(c, powers), np.dot(c[1:] * np.arange(1, 17), powers[:-1])]
            residual = max(residual, float(np.max(np.abs(full[0] @ y - ys[1]))))
            start = 1
        m = full.tolist()
        y0, y1 = ys[start]
        for k in range(start, n_steps):
            (a00, a01), (a10, a11) = m[k]
            y0, y1 = a00 * y0 + a01 * y1, a10 * y0 + a11 * y1
            ys[k + 1] = (y0, y1)
        bad = np.nonzero(ys[1:, 0] <= 0.0)[0]
        if bad.size:
            raise InvalidPotentialError(f"solution crosses zero near r = {lo + (bad[0] + 1) * h:.6g}")
        if n_steps > start:
            doubled = np.einsum("nij,njk,nk->ni", second[start:], first[start:], ys[start:-1])
            residual = max(residual, float(np.max(np.abs(doubled - ys[start + 1:]))) / 15.0)
        y = ys[-1].copy()
        nodes.extend((lo + h * np.arange(1, n_steps + 1)).tolist())
        us.extend(ys[1:, 0].tolist())
        dus.extend(ys[1:, 1].tolist())
        hvs.extend(coef(lo + h * np.arange(1, n_steps + 1)).tolist())
    slope = y[1]
    if slope <= 0.0:
        raise InvalidPotentialError("exterior slope is not positive; u vanishes beyond the range")
    u = np.asarray(us) / slope
    du = np.asarray(dus) / slope
    a = R0 - u[-1]
    if a >= R0:
        raise InvalidPotentialError("scattering length reaches the range; w would reach 1")
    return ScatteringSolution(float(a), np.asarray(nodes), u, du, np.asarray(hvs), R0, r_max, step,
                              residual, potential)


def scattering_length_integral(sol: ScatteringSolution, potential: RadialPotential) -> float:
    """(1/4 pi) int V (1 - w) / 2 d^3x, i.e. int_0^R0 r (V u / 2) dr."""
    if potential.is_zero:
        return 0.0
    if potential is not sol.potential and potential != sol.potential:
        raise DomainError("solution belongs to a different potential")
    r, wts, hv, uq, _ = sol._quad
    return float(np.sum(wts * r * hv * uq))


def w_fourier(sol: ScatteringSolution, p: np.ndarray | float) -> np.ndarray | float:
    """w_p = g_hat(p) / p^2 for p != 0."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr == 0.0):
        raise DomainError("w_p is undefined at p = 0")
    return sol.g_hat(np.abs(p_arr)) / p_arr ** 2


@dataclass(frozen=True)
class WNorms:
    grad_sq: float
    half_vw: float
    half_vw2: float
    half_v0: float

    def identity_residuals(self, a: float) -> tuple[float, float]:
        """(grad - half_vw + half_vw2, half_v0 - half_vw - 4 pi a)."""
        return (self.grad_sq - self.half_vw + self.half_vw2,
                self.half_v0 - self.half_vw - FOUR_PI * a)


def w_norms(sol: ScatteringSolution) -> WNorms:
    """||grad w||^2, ||V w / 2||_1, ||V w^2 / 2||_1 and V_hat(0) / 2."""
    if sol.potential.is_zero:
        return WNorms(0.0, 0.0, 0.0, 0.0)
    r, wts, hv, uq, duq = sol._quad
    grad_inside = FOUR_PI * np.sum(wts * (duq * r - uq) ** 2 / r ** 2)
    grad = grad_inside + FOUR_PI * sol.a ** 2 / sol.range
    half_vw = FOUR_PI * np.sum(wts * hv * r * (r - uq))
    half_vw2 = FOUR_PI * np.sum(wts * hv * (r - uq) ** 2)
    half_v0 = FOUR_PI * np.sum(wts * hv * r * r)
    return WNorms(float(grad), float(half_vw), float(half_vw2), float(half_v0))


def fit_derivative_constant(sol: ScatteringSolution, p_values: np.ndarray) -> tuple[float, np.ndarray]:
    """Smallest C with |dw/dp| <= C (p^-3 + p^-2) over consecutive lattice magnitudes.

    Slopes are finite differences between neighbouring distinct |p|; each is
    compared with the bound at the larger endpoint's midpoint.
    """
    p = np.unique(np.abs(np.asarray(p_values, dtype=float)))
    p = p[p > 0]
    if len(p) < 2:
        return 0.0, np.zeros(0)
    wp = w_fourier(sol, p)
    slopes = np.abs(np.diff(wp)) / np.diff(p)
    mid = 0.5 * (p[1:] + p[:-1])
    ratios = slopes / (mid ** -3 + mid ** -2)
    return float(np.max(ratios)), ratios
