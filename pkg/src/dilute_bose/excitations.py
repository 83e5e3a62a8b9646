"""Pair-excitation trial states built on top of a product occupation state.

Starting from an occupation map alpha supported on low momenta, the family is
the closure of alpha under operators that remove two low-momentum particles
(zero mode or the low band) and create two high-momentum ones, subject to the
box rule, a non-degeneracy condition on the set of depleted low modes, and a
gate that forbids creating p when -p is already occupied.

Coefficients are kept as a log-magnitude plus an integer power of i relative
to alpha's own coefficient, so nothing overflows however many condensate
particles there are.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstructionError, DomainError, SizeError
from .fock import (MomentumLattice, OccupationState, PairPotentialTable, QuarticEngine, annihilate, create,
                   sparse_expectation)
from .tolerances import DEFAULT

ZERO, INFRA, LOW, HIGH, OTHER = 0, 1, 2, 3, 4
SHELL_NAMES = {ZERO: "P0", INFRA: "PI", LOW: "PL", HIGH: "PH", OTHER: "unclassified"}
DEFAULT_ETA = 1.0 / 200.0
_SLACK = 1e-9


@dataclass(frozen=True)
class ShellPartition:
    """Zero mode, infrared band, low band and high band of a lattice."""

    lattice: MomentumLattice = field(repr=False)
    P0: int
    PI: tuple[int, ...]
    PL: tuple[int, ...]
    PH: tuple[int, ...]
    eps_L: float
    eta_L: float
    eps_H: float
    eta_H: float
    eta: float
    m_c: int
    radii: tuple[float, float, float, float]
    rho: float

    def __post_init__(self) -> None:
        if self.m_c < 1:
            raise DomainError("m_c must be a positive integer")
        seen: set[int] = {self.P0}
        for group in (self.PI, self.PL, self.PH):
            if seen & set(group):
                raise DomainError("shells are not disjoint")
            seen |= set(group)

    def labels(self) -> np.ndarray:
        lab = np.full(self.lattice.n_modes, OTHER, dtype=np.int64)
        lab[self.P0] = ZERO
        lab[list(self.PI)] = INFRA
        lab[list(self.PL)] = LOW
        lab[list(self.PH)] = HIGH
        return lab

    def low_tilde(self) -> tuple[int, ...]:
        return (self.P0,) + self.PL


def build_shells(lattice: MomentumLattice, rho: float, overrides: Mapping[str, float] | None = None) -> ShellPartition:
    """Classify every mode by |p|.

    Parameter overrides: ``eps_L``, ``eta_L``, ``eps_H``, ``eta_H``, ``eta``,
    ``m_c``. Radius overrides (momentum units) replace the derived band edges:
    ``low_min``, ``low_max``, ``high_min``, ``high_max``.
    """
    if not rho > 0:
        raise DomainError("density must be positive")
    ov = dict(overrides or {})
    allowed = {"eps_L", "eta_L", "eps_H", "eta_H", "eta", "m_c", "low_min", "low_max", "high_min", "high_max"}
    unknown = set(ov) - allowed
    if unknown:
        raise DomainError(f"unknown shell override: {sorted(unknown)[0]}")
    eta = float(ov.get("eta", DEFAULT_ETA))
    base = rho ** eta
    eps_L = float(ov.get("eps_L", base))
    eta_L = float(ov.get("eta_L", base))
    eps_H = float(ov.get("eps_H", base))
    eta_H = float(ov.get("eta_H", base))
    m_c = int(ov["m_c"]) if "m_c" in ov else int(math.ceil(rho ** (-3.0 * eta) - 1e-12))
    third = rho ** (1.0 / 3.0)
    r = (float(ov.get("low_min", eps_L * third)), float(ov.get("low_max", third / eta_L)),
         float(ov.get("high_min", eps_H)), float(ov.get("high_max", 1.0 / eta_H)))
    if not (0 < r[0] <= r[1] < r[2] <= r[3]):
        raise DomainError(f"band radii overlap or are out of order: {r}")
    p = np.sqrt(lattice.p2())
    P0 = lattice.index((0, 0, 0))
    if P0 < 0:
        raise DomainError("lattice lacks the zero mode")
    tol = _SLACK * max(r[3], 1.0)
    PI = tuple(int(i) for i in np.nonzero((p > 0) & (p < r[0] - tol))[0])
    PL = tuple(int(i) for i in np.nonzero((p >= r[0] - tol) & (p <= r[1] + tol))[0])
    PH = tuple(int(i) for i in np.nonzero((p >= r[2] - tol) & (p <= r[3] + tol))[0])
    return ShellPartition(lattice, P0, PI, PL, PH, eps_L, eta_L, eps_H, eta_H, eta, m_c, r, rho)


@dataclass(frozen=True)
class BoxCover:
    """Axis-aligned cubes of integer side covering the low and high bands."""

    side_L: int
    side_H: int
    kappa_L: float | None
    kappa_H: float | None
    box_id: np.ndarray = field(repr=False)

    def box_of(self, i: int) -> int:
        return int(self.box_id[i])

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, b in enumerate(self.box_id):
            if b >= 0:
                out.setdefault(int(b), []).append(i)
        return out


def build_boxes(shells: ShellPartition, side_L: int | None = None, side_H: int | None = None,
                kappa_L: float = 0.5, kappa_H: float = 2.0 / 9.0) -> BoxCover:
    """Boxes of integer side; sides default to rho^kappa in momentum units."""
    lat = shells.lattice
    if side_L is None or side_H is None:
        if not (4.0 / 9.0 <= kappa_L <= 0.5 and 1.0 / 9.0 <= kappa_H <= 2.0 / 9.0):
            raise DomainError("box exponents outside the admissible window")
    if side_L is None:
        side_L = max(1, int(math.floor(shells.rho ** kappa_L / lat.unit + 1e-9)))
    if side_H is None:
        side_H = max(1, int(math.floor(shells.rho ** kappa_H / lat.unit + 1e-9)))
    if side_L < 1 or side_H < 1:
        raise DomainError("box sides must be positive integers")
    keys: dict[tuple, int] = {}
    box_id = np.full(lat.n_modes, -1, dtype=np.int64)
    for band, side, group in (("L", side_L, shells.PL), ("H", side_H, shells.PH)):
        for i in group:
            n = lat.modes[i]
            key = (band,) + tuple(c // side for c in n)
            box_id[i] = keys.setdefault(key, len(keys))
    return BoxCover(int(side_L), int(side_H), kappa_L, kappa_H, box_id)


def is_nontrivial(subset: Iterable[Sequence[int]]) -> bool:
    """No pair sums to zero, to a third element, or to another pair's sum."""
    elems = sorted({tuple(int(c) for c in u) for u in subset})
    members = set(elems)
    sums: set[tuple[int, ...]] = set()
    for a, b in itertools.combinations(elems, 2):
        s = tuple(x + y for x, y in zip(a, b))
        if all(c == 0 for c in s):
            return False
        if s in members and s != a and s != b:
            return False
        if s in sums:
            # two distinct pairs with equal sums never share an element
            return False
        sums.add(s)
    return True


@dataclass(frozen=True)
class PairExcitationOp:
    """Remove low modes (u, v), create high modes (p, q); mode indices."""

    annihilate: tuple[int, int]
    create: tuple[int, int]

    def check(self, lattice: MomentumLattice) -> None:
        v = lattice.vectors
        if np.any(v[self.annihilate[0]] + v[self.annihilate[1]] != v[self.create[0]] + v[self.create[1]]):
            raise DomainError("pair excitation does not conserve momentum")

    @property
    def is_condensate(self) -> bool:
        return self.annihilate[0] == self.annihilate[1]


def lattice_w(lattice: MomentumLattice, w_of_p) -> np.ndarray:
    """w_k at every mode (0 at the zero mode)."""
    p = np.sqrt(lattice.p2())
    out = np.zeros(lattice.n_modes)
    nz = p > 0
    if np.any(nz):
        out[nz] = np.asarray(w_of_p(p[nz]), dtype=float)
    return out


class ExcitationFamily:
    """The generated support of Psi_alpha with normalised coefficients."""

    def __init__(self, alpha: OccupationState, shells: ShellPartition, boxes: BoxCover, w: np.ndarray,
                 states: list[OccupationState], parents: list[int], ops: list[PairExcitationOp | None]):
        self.alpha = alpha
        self.shells = shells
        self.boxes = boxes
        self.lattice = shells.lattice
        self.w = w
        self.states = states
        self.parents = np.asarray(parents, dtype=np.int64)
        self.ops = ops
        self.index = {s: i for i, s in enumerate(states)}
        self.alpha_counts = Counter(alpha.modes)
        self.log_mag = np.empty(len(states))
        self.i_power = np.empty(len(states), dtype=np.int64)
        for j, s in enumerate(states):
            self.log_mag[j], self.i_power[j] = closed_form_log(self, s)
        lm2 = 2.0 * self.log_mag
        top = lm2.max()
        self.log_norm = 0.5 * (top + math.log(np.sum(np.exp(lm2 - top))))
        phase = np.array([1, 1j, -1, -1j])[self.i_power % 4]
        self.coefficients = np.exp(self.log_mag - self.log_norm) * phase

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def C_alpha(self) -> float:
        """Normalisation of the closed form, relative to alpha's unnormalised weight."""
        return math.exp(-self.log_norm)

    def coefficient(self, state: OccupationState) -> complex:
        j = self.index.get(state)
        return 0j if j is None else complex(self.coefficients[j])

    def normalization_defect(self) -> float:
        return abs(float(np.sum(np.abs(self.coefficients) ** 2)) - 1.0)

    def is_real(self) -> bool:
        return bool(np.all(self.i_power % 2 == 0))

    def path(self, j: int) -> list[PairExcitationOp]:
        """Operators applied from alpha to reach member j, in order."""
        out = []
        while self.parents[j] >= 0:
            out.append(self.ops[j])
            j = int(self.parents[j])
        return out[::-1]

    def depleted(self, state: OccupationState) -> list[int]:
        """P_L(state, alpha): low-band modes below alpha's occupation."""
        c = Counter(state.modes)
        return [u for u in self.shells.PL if c[u] < self.alpha_counts[u]]

    def high_modes(self, state: OccupationState) -> list[int]:
        lab = self._labels
        return [k for k in state.modes if lab[k] == HIGH]

    @property
    def _labels(self) -> np.ndarray:
        if not hasattr(self, "_lab"):
            self._lab = self.shells.labels()
        return self._lab

    def vector(self, basis_index: Mapping[OccupationState, int], dim: int) -> np.ndarray:
        """Embed Psi_alpha into a full occupation basis."""
        out = np.zeros(dim, dtype=complex)
        for s, c in zip(self.states, self.coefficients):
            if s not in basis_index:
                raise DomainError("family member outside the supplied basis")
            out[basis_index[s]] = c
        return out


def closed_form_log(family: ExcitationFamily, state: OccupationState) -> tuple[float, int]:
    """(log |f| relative to f(alpha), power of i) from the closed-form coefficient."""
    lat = family.lattice
    vol_log = math.log(lat.volume)
    c = Counter(state.modes)
    a0 = family.alpha_counts[family.shells.P0]
    b0 = c[family.shells.P0]
    lm = 0.5 * ((b0 - a0) * vol_log - math.lgamma(b0 + 1) + math.lgamma(a0 + 1))
    power = 0
    lab = family._labels
    neg = lat.negation
    w = family.w
    for k, n in c.items():
        if lab[k] != HIGH:
            continue
        if w[k] == 0.0:
            return -math.inf, 0
        lm += 0.5 * math.log(abs(w[k]))
        if w[k] > 0:
            power += 1
        if n > c.get(int(neg[k]), 0):
            lm += 0.5 * math.log(2.0)
    for u in family.depleted(state):
        lm += 0.5 * (math.log(family.alpha_counts[u]) - vol_log)
    return lm, power


def check_in_M(alpha: OccupationState, shells: ShellPartition) -> None:
    lab = shells.labels()
    c = Counter(alpha.modes)
    for k, n in c.items():
        if lab[k] not in (ZERO, INFRA, LOW):
            raise DomainError(f"alpha occupies mode {shells.lattice.modes[k]} outside the low region")
        if lab[k] == LOW and n > shells.m_c:
            raise DomainError(f"alpha exceeds the low-band cap m_c={shells.m_c}")


def generate_family(alpha: OccupationState, shells: ShellPartition, boxes: BoxCover, w: np.ndarray,
                    guard: int = DEFAULT.family_guard) -> ExcitationFamily:
    """Breadth-first closure of alpha under the admissible pair excitations.

    Operators touching a high mode with w_k = 0 are skipped: every state they
    lead to carries a zero coefficient.
    """
    check_in_M(alpha, shells)
    lat = shells.lattice
    vec = lat.vectors
    neg = lat.negation
    lab = shells.labels()
    box = boxes.box_id
    w = np.asarray(w, dtype=float)
    if w.shape != (lat.n_modes,):
        raise DomainError("need one w value per mode")
    P0 = shells.P0
    PH = np.asarray(shells.PH, dtype=np.int64)
    ph_ok = w[PH] != 0.0
    alpha_c = Counter(alpha.modes)
    low_support = [u for u in shells.PL if alpha_c[u] > 0]

    states = [alpha]
    parents = [-1]
    ops: list[PairExcitationOp | None] = [None]
    seen = {alpha: 0}
    queue = deque([0])
    while queue:
        j = queue.popleft()
        beta = states[j]
        c = Counter(beta.modes)
        depleted = [u for u in low_support if c[u] < alpha_c[u]]
        l_boxes = {box[u] for u in depleted}
        occ = np.zeros(lat.n_modes, dtype=bool)
        highs = [k for k in c if lab[k] == HIGH]
        occ[highs] = True
        h_boxes = np.isin(box[PH], [box[k] for k in highs]) if highs else np.zeros(len(PH), dtype=bool)
        free_p = PH[(~occ[PH]) & (~h_boxes) & ph_ok]
        free_mask = np.zeros(lat.n_modes, dtype=bool)
        free_mask[free_p] = True

        singles = [u for u in low_support if c[u] == alpha_c[u] and box[u] not in l_boxes]
        pairs: list[tuple[int, int]] = []
        if c[P0] >= 2:
            pairs.append((P0, P0))
        if c[P0] >= 1:
            pairs.extend((P0, u) for u in singles)
        for u, v in itertools.combinations(singles, 2):
            if neg[u] == v or box[u] == box[v]:
                continue
            pairs.append((u, v))
        dep_vecs = [vec[u] for u in depleted]
        for u, v in pairs:
            new_low = [x for x in (u, v) if x != P0]
            if new_low and not is_nontrivial(dep_vecs + [vec[x] for x in new_low]):
                continue
            total = vec[u] + vec[v]
            q = lat.index_array(total[None, :] - vec[free_p])
            p = free_p
            ok = (q >= 0)
            ok[ok] &= free_mask[q[ok]]
            ok &= q > p
            if not np.any(ok):
                continue
            p, q = p[ok], q[ok]
            keep = box[p] != box[q]
            if not (u == P0 and v == P0):
                keep &= (~occ[neg[p]]) & (~occ[neg[q]])
            for pp, qq in zip(p[keep], q[keep]):
                _, s = annihilate(beta.modes, v)
                _, s = annihilate(s, u)
                _, s = create(s, int(qq))
                _, s = create(s, int(pp))
                new = OccupationState(s)
                if new in seen:
                    continue
                seen[new] = len(states)
                states.append(new)
                parents.append(j)
                ops.append(PairExcitationOp((u, v), (int(pp), int(qq))))
                queue.append(len(states) - 1)
                if len(states) > guard:
                    raise SizeError("family size guard exceeded", len(states))
    return ExcitationFamily(alpha, shells, boxes, w, states, parents, ops)


def apply_op(state: OccupationState, op: PairExcitationOp) -> OccupationState | None:
    """Occupation content of a^+_p a^+_q a_u a_v |state>, or None if it vanishes."""
    u, v = op.annihilate
    p, q = op.create
    f, s = annihilate(state.modes, v)
    if s is None:
        return None
    f, s = annihilate(s, u)
    if s is None:
        return None
    _, s = create(s, q)
    _, s = create(s, p)
    return OccupationState(s)


@dataclass(frozen=True)
class RatioCheck:
    actual: complex
    predicted: complex
    kind: str

    @property
    def defect(self) -> float:
        if self.kind == "gated":
            return max(0.0, abs(self.actual) - abs(self.predicted))
        return abs(self.actual - self.predicted)


def coefficient_ratio(family: ExcitationFamily, beta: OccupationState, op: PairExcitationOp) -> complex:
    """f(A beta) / f(beta); zero when the image lies outside the family."""
    fb = family.coefficient(beta)
    if fb == 0:
        raise DomainError("beta is not a family member")
    image = apply_op(beta, op)
    if image is None:
        return 0j
    return family.coefficient(image) / fb


def _sqrt_neg(x: float) -> complex:
    """sqrt(-x) with sqrt of a negative number taken as i sqrt|x|."""
    return complex(math.sqrt(-x)) if x <= 0 else 1j * math.sqrt(x)


def ratio_prediction(family: ExcitationFamily, beta: OccupationState, op: PairExcitationOp) -> RatioCheck:
    """Compare the stored ratio with the one-step identities for the coefficients."""
    actual = coefficient_ratio(family, beta, op)
    lat = family.lattice
    vol = lat.volume
    u, v = op.annihilate
    p, q = op.create
    w = family.w
    c = Counter(beta.modes)
    image = apply_op(beta, op)
    if image is None or image not in family.index:
        return RatioCheck(actual, 0j, "absent")
    if u == v == family.shells.P0:
        b0 = c[u]
        return RatioCheck(actual, -w[p] * math.sqrt(b0 * (b0 - 1)) / vol, "condensate")
    neg = lat.negation
    mag = math.sqrt(c[u] * c[v]) / vol
    if c[int(neg[p])] == 0 and c[int(neg[q])] == 0:
        return RatioCheck(actual, 2.0 * _sqrt_neg(w[p]) * _sqrt_neg(w[q]) * mag, "clean")
    return RatioCheck(actual, math.sqrt(abs(w[p] * w[q])) * mag, "gated")


def q_statistics(family: ExcitationFamily, *modes: int) -> float:
    """Sum over members of prod_i beta(u_i) |f(beta)|^2."""
    prob = np.abs(family.coefficients) ** 2
    total = 0.0
    for s, pr in zip(family.states, prob):
        c = Counter(s.modes)
        prod = 1
        for u in modes:
            prod *= c[u]
        total += prod * pr
    return float(total)


def complement_mass(family: ExcitationFamily, mode: int) -> float:
    """Probability of members whose occupation of ``mode`` differs from alpha's."""
    prob = np.abs(family.coefficients) ** 2
    a = family.alpha_counts[mode]
    return float(sum(pr for s, pr in zip(family.states, prob) if s.count(mode) != a))


def n_alpha(alpha: OccupationState, shells: ShellPartition) -> float:
    """alpha(0)^2 + sum over ordered u != +-v in the low region of 2 alpha(u) alpha(v)."""
    c = Counter(alpha.modes)
    neg = shells.lattice.negation
    low = [u for u in shells.low_tilde() if c[u] > 0]
    total = float(c[shells.P0] ** 2)
    for u in low:
        for v in low:
            if u != v and v != neg[u]:
                total += 2.0 * c[u] * c[v]
    return total


def high_occupation_bound(family: ExcitationFamily, k: int, w_of_vec=None) -> float:
    """Finite-size upper bound on Q_alpha(k) for a high mode k.

    alpha(0)^2 w_k^2 / |L|^2 + sum over ordered u != +-v of 2 alpha(u) alpha(v) |w_k w_p| / |L|^2,
    with p = u + v - k. ``w_of_vec`` evaluates w on integer vectors that may
    lie outside the lattice.
    """
    lat = family.lattice
    vol = lat.volume
    c = family.alpha_counts
    sh = family.shells
    neg = lat.negation
    vec = lat.vectors
    wk = family.w[k]
    if w_of_vec is None:
        def w_of_vec(n):
            i = lat.index(n)
            return family.w[i] if i >= 0 else 0.0
    total = c[sh.P0] ** 2 * wk ** 2 / vol ** 2
    low = [u for u in sh.low_tilde() if c[u] > 0]
    for u in low:
        for v in low:
            if u == v or v == neg[u]:
                continue
            p = tuple(int(x) for x in vec[u] + vec[v] - vec[k])
            total += 2.0 * c[u] * c[v] * abs(wk * w_of_vec(p)) / vol ** 2
    return float(total)


def pairing_expectation(family: ExcitationFamily, u1: int, u2: int, u3: int, u4: int) -> complex:
    """<Psi| a^+_{u1} a^+_{u2} a_{u3} a_{u4} |Psi> via the unique image of each member."""
    total = 0j
    for s, f in zip(family.states, family.coefficients):
        amp, s1 = annihilate(s.modes, u4)
        if s1 is None:
            continue
        g, s2 = annihilate(s1, u3)
        if s2 is None:
            continue
        amp *= g
        g, s3 = create(s2, u2)
        amp *= g
        g, s4 = create(s3, u1)
        amp *= g
        ft = family.coefficient(OccupationState(s4))
        if ft != 0:
            total += f * np.conj(ft) * amp
    return complex(total)


# --- energy accounting ---------------------------------------------------------

@dataclass(frozen=True)
class ComponentLine:
    name: str
    psi: float
    alpha: float
    main: float

    @property
    def residual(self) -> float:
        return self.psi - self.alpha - self.main


@dataclass(frozen=True)
class EnergyReport:
    lines: tuple[ComponentLine, ...]
    n_alpha: float
    total_psi: float
    total_alpha: float
    predicted_gap: float
    main_sum: float

    def line(self, name: str) -> ComponentLine:
        for ln in self.lines:
            if ln.name == name:
                return ln
        raise KeyError(name)

    @property
    def gap(self) -> float:
        return self.total_alpha - self.total_psi


def energy_components(family: ExcitationFamily, vhat, norms, a: float,
                      engine: QuarticEngine | None = None) -> EnergyReport:
    """Per-part expectations in Psi_alpha and alpha against the predicted main terms.

    ``norms`` carries grad_sq, half_vw, half_vw2 and half_v0 for the same
    potential (see ``scattering.w_norms``).
    """
    lat = family.lattice
    labels = family.shells.labels()
    if engine is None:
        engine = QuarticEngine(lat, vhat, labels)
    elif engine.labels is None or not np.array_equal(engine.labels, labels):
        raise DomainError("engine shells differ from the family's shells")
    psi = sparse_expectation(engine, family.states, family.coefficients, by_group=True)
    alp = sparse_expectation(engine, [family.alpha], np.array([1.0]), by_group=True)
    na = n_alpha(family.alpha, family.shells)
    vol = lat.volume
    mains = {
        "kinetic": norms.grad_sq * na / vol,
        "abab": 0.0,
        "LL": 0.0,
        "LH": -2.0 * norms.half_vw * na / vol,
        "HH": norms.half_vw2 * na / vol,
        "rest": 0.0,
    }
    lines = tuple(ComponentLine(k, psi[k].real, alp[k].real, mains[k]) for k in mains)
    main_sum = sum(mains.values())
    predicted_gap = (norms.half_v0 - 4.0 * math.pi * a) * na / vol
    return EnergyReport(lines, na, psi["total"].real, alp["total"].real, predicted_gap, main_sum)


# --- high-high pair structure ----------------------------------------------------

@dataclass(frozen=True)
class ACoefficient:
    value: complex
    main: float
    bound: float
    n_terms: int

    @property
    def residual(self) -> float:
        return abs(self.value - self.main)


def a_coefficients(family: ExcitationFamily, u1: int, u2: int, k1: int, k2: int, k3: int, k4: int,
                   rho: float | None = None) -> ACoefficient:
    """Sum over common-ancestor pairs of conj f(beta) f(gamma) <beta|a+k1 a+k2 a k3 a k4|gamma>."""
    lat = family.lattice
    vec = lat.vectors
    if np.any(vec[u1] + vec[u2] != vec[k1] + vec[k2]) or np.any(vec[k1] + vec[k2] != vec[k3] + vec[k4]):
        raise DomainError("momenta do not balance")
    vol = lat.volume
    sh = family.shells
    op_b = PairExcitationOp((u1, u2), (k1, k2))
    op_g = PairExcitationOp((u1, u2), (k3, k4))
    total = 0j
    n = 0
    for s, f in zip(family.states, family.coefficients):
        beta = apply_op(s, op_b)
        gamma = apply_op(s, op_g)
        if beta is None or gamma is None:
            continue
        fb, fg = family.coefficient(beta), family.coefficient(gamma)
        if fb == 0 or fg == 0:
            continue
        amp, _ = _quartic_amp(gamma, k1, k2, k3, k4)
        total += np.conj(fb) * fg * amp
        n += 1
    c = family.alpha_counts
    zero = sh.P0
    F = 1.0 if u1 == u2 == zero else 2.0
    main = c[u1] * c[u2] * F ** 2 * family.w[k1] * family.w[k3] / vol ** 2
    N = family.alpha.N
    rho = N / vol if rho is None else rho
    if u1 == zero and u2 == zero:
        scale = N ** 2
    elif u1 == zero or u2 == zero:
        scale = N * c[u2 if u1 == zero else u1]
    else:
        scale = c[u1] * c[u2]
    bound = rho ** 0.125 * scale / vol ** 2
    return ACoefficient(complex(total), float(main), float(bound), n)


def _quartic_amp(state: OccupationState, k1, k2, k3, k4):
    amp, s = annihilate(state.modes, k4)
    if s is None:
        return 0.0, None
    g, s = annihilate(s, k3)
    if s is None:
        return 0.0, None
    amp *= g
    g, s = create(s, k2)
    amp *= g
    g, s = create(s, k1)
    return amp * g, s


def _low_removed(family: ExcitationFamily, state: OccupationState) -> list[int]:
    """Multiset of low-region modes removed from alpha (zeros repeated)."""
    c = Counter(state.modes)
    out = [family.shells.P0] * (family.alpha_counts[family.shells.P0] - c[family.shells.P0])
    out.extend(family.depleted(state))
    return sorted(out)


def _pairings(items: list[int]):
    """All perfect matchings of a list into unordered pairs (duplicates collapsed)."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    seen = set()
    for i, x in enumerate(rest):
        key = x
        if key in seen:
            continue
        seen.add(key)
        pair = (first, x)
        for tail in _pairings(rest[:i] + rest[i + 1:]):
            yield (pair,) + tail


def decompositions(family: ExcitationFamily, state: OccupationState) -> list[Counter]:
    """All ways of writing state as alpha plus pair operators (multisets of ops)."""
    vec = family.lattice.vectors
    lows = _low_removed(family, state)
    highs = sorted(family.high_modes(state))
    out: list[Counter] = []
    seen = set()
    low_pairings = list(_pairings(lows))
    for hp in _pairings(highs):
        hsum = [tuple(int(x) for x in vec[a] + vec[b]) for a, b in hp]
        for lp in low_pairings:
            lsum = [tuple(int(x) for x in vec[a] + vec[b]) for a, b in lp]
            # match each high pair to a low pair with the same total momentum
            for perm in _sum_matchings(hsum, lsum):
                ops = Counter((tuple(sorted(lp[perm[i]])), tuple(sorted(hp[i]))) for i in range(len(hp)))
                key = frozenset(ops.items())
                if key not in seen:
                    seen.add(key)
                    out.append(ops)
    return out


def _sum_matchings(hsum, lsum):
    n = len(hsum)

    def rec(i, used):
        if i == n:
            yield ()
            return
        for j in range(n):
            if j not in used and lsum[j] == hsum[i]:
                for tail in rec(i + 1, used | {j}):
                    yield (j,) + tail
    yield from rec(0, frozenset())


@dataclass(frozen=True)
class ErrorPair:
    beta: int
    gamma: int
    s: int
    t: int
    ancestor: int
    lows: tuple[int, ...]


@dataclass
class Census:
    n_pairs: int
    n_main: int
    errors: list[ErrorPair]
    groups: dict[tuple, int]
    group_bounds: dict[tuple, float]

    @property
    def labels_ok(self) -> bool:
        return all(e.s + e.t >= 4 and e.t >= 1 for e in self.errors)

    @property
    def counts_ok(self) -> bool:
        return all(self.groups[g] <= self.group_bounds[g] for g in self.groups)


def census_bound(s: int, t: int, volume: float, rho: float, eta: float) -> float:
    return math.factorial(t) * t ** (0.75 * t) * volume ** ((s + t) / 4.0 + 1.0) * rho ** (-eta * (s + t))


def error_pair_census(family: ExcitationFamily, quadruples: Sequence[tuple[int, int, int, int]] | None = None,
                      rho: float | None = None) -> Census:
    """Split all member pairs linked by a^+k1 a^+k2 a_k3 a_k4 (distinct high k's) into main and error pairs.

    A pair is main when both members come from one common member by the same
    low pair. Error pairs get the labels (s, t): the zero and low-band counts
    of the smallest set of operators in which the two members differ.
    """
    lat = family.lattice
    vec = family.lattice.vectors
    lab = family._labels
    sh = family.shells
    rho = family.alpha.N / lat.volume if rho is None else rho
    PH = np.asarray(sh.PH, dtype=np.int64)
    wanted = None if quadruples is None else {tuple(q) for q in quadruples}
    pairs: set[tuple[int, int]] = set()
    for gi, gamma in enumerate(family.states):
        highs = family.high_modes(gamma)
        if len(highs) < 2:
            continue
        occ = np.zeros(lat.n_modes, dtype=bool)
        occ[highs] = True
        for k3, k4 in itertools.permutations(highs, 2):
            total = vec[k3] + vec[k4]
            k2 = lat.index_array(total[None, :] - vec[PH])
            ok = (k2 >= 0) & (~occ[PH])
            ok[ok] &= (lab[k2[ok]] == HIGH) & (~occ[k2[ok]]) & (k2[ok] != PH[ok])
            for k1, kk2 in zip(PH[ok], k2[ok]):
                if wanted is not None and (int(k1), int(kk2), k3, k4) not in wanted:
                    continue
                amp, s = _quartic_amp(gamma, int(k1), int(kk2), k3, k4)
                if s is None:
                    continue
                bi = family.index.get(OccupationState(s))
                if bi is not None:
                    pairs.add((bi, gi))
    n_main = 0
    errors: list[ErrorPair] = []
    for bi, gi in sorted(pairs):
        beta, gamma = family.states[bi], family.states[gi]
        hb, hg = set(family.high_modes(beta)), set(family.high_modes(gamma))
        kg = sorted(hg - hb)
        if _is_main(family, gamma, kg):
            n_main += 1
            continue
        errors.append(_label_error(family, bi, gi))
    groups: dict[tuple, int] = {}
    for e in errors:
        key = (e.ancestor, e.s, tuple(sorted(x for x in e.lows if x != sh.P0)))
        groups[key] = groups.get(key, 0) + 1
    bounds = {g: census_bound(g[1], len(g[2]), lat.volume, rho, sh.eta) for g in groups}
    return Census(len(pairs), n_main, errors, groups, bounds)


def _is_main(family: ExcitationFamily, gamma: OccupationState, kg: list[int]) -> bool:
    """Is there a low pair (u1, u2) with gamma = A^{u1 u2}_{k3 k4} of a member?"""
    vec = family.lattice.vectors
    k3, k4 = kg
    total = vec[k3] + vec[k4]
    c = Counter(gamma.modes)
    removed = _low_removed(family, gamma)
    for u1, u2 in set(itertools.combinations(removed, 2)):
        if np.any(vec[u1] + vec[u2] != total):
            continue
        _, s = annihilate(gamma.modes, k4)
        _, s = annihilate(s, k3)
        _, s = create(s, u2)
        _, s = create(s, u1)
        if OccupationState(s) in family.index:
            return True
    return False


def _label_error(family: ExcitationFamily, bi: int, gi: int) -> ErrorPair:
    beta, gamma = family.states[bi], family.states[gi]
    db = decompositions(family, beta)
    dg = decompositions(family, gamma)
    if not db or not dg:
        raise ConstructionError("member without an operator decomposition")
    n_ops = sum(db[0].values())
    best = None
    for ob in db:
        for og in dg:
            shared = ob & og
            n_shared = sum(shared.values())
            if best is not None and n_shared <= best[0]:
                continue
            anc = _apply_ops(family, shared)
            if anc is None or anc not in family.index:
                continue
            diff = ob - shared
            lows = tuple(sorted(x for (lp, _), m in diff.items() for _ in range(m) for x in lp))
            best = (n_shared, family.index[anc], lows)
    if best is None:
        raise ConstructionError("no common ancestor found")
    n_shared, anc, lows = best
    s = sum(1 for x in lows if x == family.shells.P0)
    t = len(lows) - s
    assert 2 * (n_ops - n_shared) == len(lows)
    return ErrorPair(bi, gi, s, t, anc, lows)


def _apply_ops(family: ExcitationFamily, ops: Counter) -> OccupationState | None:
    state = family.alpha
    for (lp, hp), m in ops.items():
        for _ in range(m):
            state = apply_op(state, PairExcitationOp(lp, hp))
            if state is None:
                return None
    return state
