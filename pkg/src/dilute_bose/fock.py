"""Second-quantised bosons on a finite set of torus momenta.

Modes are integer triples n with momentum (2 pi / L) n. A fixed-N Fock state
is stored as the sorted multiset of occupied mode indices, so states with a
handful of particles stay small even when the lattice has thousands of modes.

The Hamiltonian is

    H = sum_p p^2 a_p^+ a_p + (1 / 2|L|) sum_{p,q,u} V_u a_{p}^+ a_{q}^+ a_{p-u} a_{q+u},

restricted to terms whose four momenta all lie in the mode set.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.special import comb, logsumexp

from .errors import DomainError, SizeError
from .tolerances import DEFAULT

Vec = tuple[int, int, int]

ABAB, LL, LH, HH, REST = 0, 1, 2, 3, 4
PART_NAMES = ("abab", "LL", "LH", "HH", "rest")


@dataclass(frozen=True)
class MomentumLattice:
    """Finite mode set on the dual torus, closed under negation."""

    L: float
    modes: tuple[Vec, ...]
    cutoff: int | None = None

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise DomainError("box side must be positive")
        modes = tuple(sorted({tuple(int(c) for c in n) for n in self.modes},
                             key=lambda n: (n[0] ** 2 + n[1] ** 2 + n[2] ** 2, n)))
        if len(modes) != len(self.modes):
            raise DomainError("duplicate modes")
        mode_set = set(modes)
        for n in modes:
            if (-n[0], -n[1], -n[2]) not in mode_set:
                raise DomainError(f"mode set not closed under negation: {n}")
        object.__setattr__(self, "modes", modes)
        vec = np.array(modes, dtype=np.int64).reshape(-1, 3)
        reach = int(np.max(np.abs(vec))) if len(vec) else 0
        span = 4 * reach + 1
        lookup = np.full((span, span, span), -1, dtype=np.int64)
        lookup[vec[:, 0] + 2 * reach, vec[:, 1] + 2 * reach, vec[:, 2] + 2 * reach] = np.arange(len(vec))
        object.__setattr__(self, "_vec", vec)
        object.__setattr__(self, "_reach", reach)
        object.__setattr__(self, "_lookup", lookup)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(modes)})
        neg = np.array([self._index[(-n[0], -n[1], -n[2])] for n in modes], dtype=np.int64)
        object.__setattr__(self, "_neg", neg)

    @classmethod
    def cube(cls, L: float, cutoff: int) -> "MomentumLattice":
        rng = range(-cutoff, cutoff + 1)
        return cls(L, tuple(itertools.product(rng, rng, rng)), cutoff)

    @classmethod
    def ball(cls, L: float, max_norm_sq: int) -> "MomentumLattice":
        c = int(math.isqrt(max_norm_sq))
        rng = range(-c, c + 1)
        modes = tuple(n for n in itertools.product(rng, rng, rng) if n[0] ** 2 + n[1] ** 2 + n[2] ** 2 <= max_norm_sq)
        return cls(L, modes, c)

    @classmethod
    def line(cls, L: float, jmax: int) -> "MomentumLattice":
        return cls(L, tuple((j, 0, 0) for j in range(-jmax, jmax + 1)), jmax)

    @property
    def volume(self) -> float:
        return self.L ** 3

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def vectors(self) -> np.ndarray:
        return self._vec

    @property
    def negation(self) -> np.ndarray:
        return self._neg

    @property
    def unit(self) -> float:
        return 2.0 * math.pi / self.L

    def index(self, n: Sequence[int]) -> int:
        return self._index.get(tuple(int(c) for c in n), -1)

    def index_array(self, vecs: np.ndarray) -> np.ndarray:
        """Vectorised mode index of integer vectors (-1 if absent)."""
        vecs = np.asarray(vecs, dtype=np.int64)
        r = self._reach
        inside = np.all(np.abs(vecs) <= 2 * r, axis=-1)
        safe = np.where(inside[..., None], vecs + 2 * r, 0)
        out = self._lookup[safe[..., 0], safe[..., 1], safe[..., 2]]
        return np.where(inside, out, -1)

    def norm_sq(self) -> np.ndarray:
        return np.sum(self._vec ** 2, axis=1)

    def p2(self) -> np.ndarray:
        return self.unit ** 2 * self.norm_sq()

    def momentum(self, i: int) -> np.ndarray:
        return self.unit * self._vec[i]


@dataclass(frozen=True, order=True)
class OccupationState:
    """Fixed-N occupation map, stored as the sorted multiset of mode indices."""

    modes: tuple[int, ...]

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "OccupationState":
        out: list[int] = []
        for i, c in enumerate(counts):
            if c < 0:
                raise DomainError("occupations must be nonnegative")
            out.extend([i] * int(c))
        return cls(tuple(out))

    @classmethod
    def from_mapping(cls, lattice: MomentumLattice, occ: Mapping[Vec, int]) -> "OccupationState":
        out: list[int] = []
        for n, c in occ.items():
            i = lattice.index(n)
            if i < 0:
                raise DomainError(f"mode {n} not in lattice")
            if c < 0:
                raise DomainError("occupations must be nonnegative")
            out.extend([i] * int(c))
        return cls(tuple(sorted(out)))

    @property
    def N(self) -> int:
        return len(self.modes)

    def count(self, i: int) -> int:
        lo = bisect.bisect_left(self.modes, i)
        hi = bisect.bisect_right(self.modes, i, lo)
        return hi - lo

    def counts(self, n_modes: int) -> np.ndarray:
        return np.bincount(np.asarray(self.modes, dtype=np.int64), minlength=n_modes)

    def support(self) -> list[int]:
        return sorted(set(self.modes))

    def as_mapping(self, lattice: MomentumLattice) -> dict[Vec, int]:
        return {lattice.modes[i]: self.count(i) for i in self.support()}

    def total_momentum(self, lattice: MomentumLattice) -> tuple[int, int, int]:
        v = lattice.vectors[list(self.modes)].sum(axis=0) if self.modes else np.zeros(3, dtype=int)
        return tuple(int(x) for x in v)


def annihilate(state: tuple[int, ...], i: int) -> tuple[float, tuple[int, ...] | None]:
    lo = bisect.bisect_left(state, i)
    hi = bisect.bisect_right(state, i, lo)
    n = hi - lo
    if n == 0:
        return 0.0, None
    return math.sqrt(n), state[:lo] + state[lo + 1:]


def create(state: tuple[int, ...], i: int) -> tuple[float, tuple[int, ...]]:
    lo = bisect.bisect_left(state, i)
    hi = bisect.bisect_right(state, i, lo)
    return math.sqrt(hi - lo + 1), state[:hi] + (i,) + state[hi:]


def apply_quartic(state: tuple[int, ...], k1: int, k2: int, k3: int, k4: int) -> tuple[float, tuple[int, ...] | None]:
    """a_{k1}^+ a_{k2}^+ a_{k3} a_{k4} on a basis state."""
    amp, s = annihilate(state, k4)
    if s is None:
        return 0.0, None
    f, s = annihilate(s, k3)
    if s is None:
        return 0.0, None
    amp *= f
    f, s = create(s, k2)
    amp *= f
    f, s = create(s, k1)
    return amp * f, s


class PairPotentialTable:
    """V_hat on lattice difference vectors, cached by integer |n|^2."""

    def __init__(self, lattice: MomentumLattice, vhat: Callable[[np.ndarray], np.ndarray] | None):
        self.lattice = lattice
        self.vhat = vhat
        self._cache: dict[int, float] = {}

    def __call__(self, diff: np.ndarray) -> np.ndarray:
        d2 = np.sum(np.asarray(diff, dtype=np.int64) ** 2, axis=-1)
        if self.vhat is None:
            return np.zeros(d2.shape)
        keys = np.unique(d2)
        missing = [int(k) for k in keys if int(k) not in self._cache]
        if missing:
            vals = np.atleast_1d(self.vhat(self.lattice.unit * np.sqrt(np.asarray(missing, dtype=float))))
            for k, v in zip(missing, vals):
                self._cache[k] = float(v)
        lut = np.array([self._cache[int(k)] for k in keys])
        return lut[np.searchsorted(keys, d2)]


class QuarticEngine:
    """Enumerates every quartic term acting on a basis state, vectorised over the first created mode."""

    def __init__(self, lattice: MomentumLattice, vhat, labels: np.ndarray | None = None):
        self.lattice = lattice
        self.table = vhat if isinstance(vhat, PairPotentialTable) else PairPotentialTable(lattice, vhat)
        self.labels = labels
        self._all = np.arange(lattice.n_modes)

    def classify(self, k1, k2, k3, k4) -> np.ndarray:
        """Term group of each (k1, k2, k3, k4): abab / LL / LH / HH / rest."""
        if self.labels is None:
            raise DomainError("engine built without shell labels")
        lab = self.labels
        abab = ((k1 == k3) & (k2 == k4)) | ((k1 == k4) & (k2 == k3))
        low = [(lab[k] == 0) | (lab[k] == 2) for k in (k1, k2, k3, k4)]
        high = [lab[k] == 3 for k in (k1, k2, k3, k4)]
        n_low = sum(x.astype(int) for x in low)
        n_high = sum(x.astype(int) for x in high)
        out = np.full(np.shape(k1), REST)
        out = np.where((n_low == 4), LL, out)
        out = np.where((n_low == 2) & (n_high == 2), LH, out)
        out = np.where((n_high == 4), HH, out)
        return np.where(abab, ABAB, out)

    def terms(self, state: tuple[int, ...]):
        """Yield (k1 array, k2 array, k3, k4, amplitude array, reduced state)."""
        vec = self.lattice.vectors
        inv_vol = 1.0 / self.lattice.volume
        for k4 in sorted(set(state)):
            f4, s1 = annihilate(state, k4)
            for k3 in sorted(set(s1)):
                f3, reduced = annihilate(s1, k3)
                total = vec[k3] + vec[k4]
                k2 = self.lattice.index_array(total[None, :] - vec)
                ok = k2 >= 0
                k1 = self._all[ok]
                k2 = k2[ok]
                occ = np.bincount(np.asarray(reduced, dtype=np.int64), minlength=self.lattice.n_modes)
                c2 = np.sqrt(occ[k2] + 1.0)
                c1 = np.sqrt(occ[k1] + (k1 == k2) + 1.0)
                v = self.table(vec[k1] - vec[k3])
                amp = 0.5 * inv_vol * v * f4 * f3 * c2 * c1
                yield k1, k2, k3, k4, amp, reduced


def _encode(rows: np.ndarray, base: int) -> np.ndarray:
    rows = np.sort(rows, axis=1)
    code = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(rows.shape[1] - 1, -1, -1):
        code = code * base + rows[:, j]
    return code


class StateIndex:
    """Sorted integer codes for a list of fixed-N states (fast batch lookup)."""

    def __init__(self, states: Sequence[OccupationState], n_modes: int):
        self.states = list(states)
        self.base = n_modes
        N = self.states[0].N if self.states else 0
        if N and N * math.log2(max(n_modes, 2)) > 62:
            raise SizeError("state encoding overflows 64 bits", n_modes ** N)
        arr = np.array([s.modes for s in self.states], dtype=np.int64).reshape(len(self.states), N)
        codes = _encode(arr, n_modes) if N else np.zeros(len(self.states), dtype=np.int64)
        order = np.argsort(codes, kind="stable")
        self._codes = codes[order]
        self._order = order

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Positions in the original list, -1 when absent."""
        if len(self._codes) == 0:
            return np.full(rows.shape[0], -1)
        codes = _encode(rows, self.base)
        pos = np.clip(np.searchsorted(self._codes, codes), 0, len(self._codes) - 1)
        hit = self._codes[pos] == codes
        return np.where(hit, self._order[pos], -1)


def _images(reduced: tuple[int, ...], k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    rows = np.empty((len(k1), len(reduced) + 2), dtype=np.int64)
    if reduced:
        rows[:, : len(reduced)] = reduced
    rows[:, -2] = k1
    rows[:, -1] = k2
    return rows


@dataclass
class OperatorMatrix:
    basis: list[OccupationState]
    matrix: sparse.csr_matrix
    lattice: MomentumLattice = field(repr=False)

    def __post_init__(self) -> None:
        self.index = {s: i for i, s in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def expectation(self, vec: np.ndarray) -> complex:
        v = np.asarray(vec)
        return complex(np.vdot(v, self.matrix @ v))

    def hermiticity_defect(self) -> float:
        d = (self.matrix - self.matrix.conj().T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def sector_violation(self) -> float:
        """Largest |entry| connecting different total momenta."""
        mom = [s.total_momentum(self.lattice) for s in self.basis]
        coo = self.matrix.tocoo()
        worst = 0.0
        for i, j, v in zip(coo.row, coo.col, coo.data):
            if mom[i] != mom[j]:
                worst = max(worst, abs(v))
        return worst

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.basis != other.basis:
            raise DomainError("bases differ")
        return OperatorMatrix(self.basis, (self.matrix + other.matrix).tocsr(), self.lattice)


def basis_dimension(n_modes: int, N: int) -> int:
    return int(comb(n_modes + N - 1, N, exact=True))


def enumerate_basis(lattice: MomentumLattice, N: int, mode_subset: Sequence[int] | None = None,
                    guard: int = DEFAULT.basis_guard) -> list[OccupationState]:
    """All fixed-N occupations on the subset, in lexicographic order of sorted mode lists."""
    subset = sorted(range(lattice.n_modes) if mode_subset is None else set(int(i) for i in mode_subset))
    if len(subset) > 12 and mode_subset is not None:
        raise SizeError("mode subset larger than 12", len(subset))
    dim = basis_dimension(len(subset), N)
    if dim > guard:
        raise SizeError("basis dimension exceeds guard", dim)
    return [OccupationState(c) for c in itertools.combinations_with_replacement(subset, N)]


def kinetic_diagonal(lattice: MomentumLattice, basis: Sequence[OccupationState]) -> np.ndarray:
    p2 = lattice.p2()
    return np.array([float(np.sum(p2[list(s.modes)])) for s in basis])


def quartic_element(lattice: MomentumLattice, bra: OccupationState, ket: OccupationState,
                    p: Vec, q: Vec, u: Vec, vhat) -> float:
    """<bra| (V_u / 2|L|) a_p^+ a_q^+ a_{p-u} a_{q+u} |ket> for one (p, q, u)."""
    if bra.N != ket.N:
        raise DomainError("bra and ket in different particle sectors")
    idx = [lattice.index(n) for n in (p, q, tuple(np.subtract(p, u)), tuple(np.add(q, u)))]
    if min(idx) < 0:
        return 0.0
    amp, out = apply_quartic(ket.modes, *idx)
    if out is None or out != bra.modes:
        return 0.0
    table = vhat if isinstance(vhat, PairPotentialTable) else PairPotentialTable(lattice, vhat)
    return float(table(np.asarray(u))) * amp / (2.0 * lattice.volume)


def _assemble(lattice: MomentumLattice, basis: list[OccupationState], engine: QuarticEngine,
              groups: Iterable[int] | None, with_kinetic: bool) -> dict[int | str, OperatorMatrix]:
    dim = len(basis)
    index = StateIndex(basis, lattice.n_modes)
    wanted = None if groups is None else list(groups)
    rows: dict[int | str, list] = {}
    cols: dict[int | str, list] = {}
    vals: dict[int | str, list] = {}
    keys: list[int | str] = ["H"] if wanted is None else wanted
    for k in keys:
        rows[k], cols[k], vals[k] = [], [], []
    for j, ket in enumerate(basis):
        for k1, k2, k3, k4, amp, reduced in engine.terms(ket.modes):
            tgt = index.lookup(_images(reduced, k1, k2))
            ok = tgt >= 0
            if wanted is None:
                rows["H"].append(tgt[ok])
                cols["H"].append(np.full(ok.sum(), j))
                vals["H"].append(amp[ok])
            else:
                cls = engine.classify(k1, k2, np.full_like(k1, k3), np.full_like(k1, k4))
                for g in wanted:
                    sel = ok & (cls == g)
                    rows[g].append(tgt[sel])
                    cols[g].append(np.full(sel.sum(), j))
                    vals[g].append(amp[sel])
    out: dict[int | str, OperatorMatrix] = {}
    for k in keys:
        r = np.concatenate(rows[k]) if rows[k] else np.zeros(0, dtype=int)
        c = np.concatenate(cols[k]) if cols[k] else np.zeros(0, dtype=int)
        v = np.concatenate(vals[k]) if vals[k] else np.zeros(0)
        mat = sparse.coo_matrix((v, (r, c)), shape=(dim, dim)).tocsr()
        if with_kinetic and k == "H":
            mat = (mat + sparse.diags(kinetic_diagonal(lattice, basis))).tocsr()
        out[k] = OperatorMatrix(basis, mat, lattice)
    return out


def build_hamiltonian(lattice: MomentumLattice, N: int, vhat, mode_subset: Sequence[int] | None = None,
                      guard: int = DEFAULT.basis_guard) -> OperatorMatrix:
    """Kinetic diagonal plus every momentum-conserving quartic term inside the mode set."""
    basis = enumerate_basis(lattice, N, mode_subset, guard)
    engine = QuarticEngine(lattice, vhat)
    return _assemble(lattice, basis, engine, None, True)["H"]


@dataclass
class Decomposition:
    kinetic: OperatorMatrix
    parts: dict[str, OperatorMatrix]

    def total(self) -> OperatorMatrix:
        out = self.kinetic
        for m in self.parts.values():
            out = out + m
        return out


def decompose_interaction(lattice: MomentumLattice, N: int, vhat, labels: np.ndarray,
                          mode_subset: Sequence[int] | None = None,
                          guard: int = DEFAULT.basis_guard) -> Decomposition:
    """Split the quartic terms into abab, LL, LH, HH and the remainder.

    ``labels`` gives each mode's shell: 0 zero mode, 1 infrared, 2 low, 3 high,
    4 unclassified.
    """
    labels = np.asarray(labels)
    if labels.shape != (lattice.n_modes,):
        raise DomainError("one shell label per mode required")
    basis = enumerate_basis(lattice, N, mode_subset, guard)
    engine = QuarticEngine(lattice, vhat, labels)
    groups = _assemble(lattice, basis, engine, range(5), False)
    kin = OperatorMatrix(basis, sparse.diags(kinetic_diagonal(lattice, basis)).tocsr(), lattice)
    return Decomposition(kin, {PART_NAMES[g]: groups[g] for g in range(5)})


def sparse_expectation(engine: QuarticEngine, states: Sequence[OccupationState], coeffs: np.ndarray,
                       by_group: bool = False) -> dict[str, complex]:
    """<psi| H |psi> for psi = sum c_i |state_i>, without a full basis.

    Returns the kinetic and quartic parts; with ``by_group`` the quartic part
    is split into the abab / LL / LH / HH / rest groups.
    """
    lattice = engine.lattice
    coeffs = np.asarray(coeffs, dtype=complex)
    index = StateIndex(states, lattice.n_modes)
    p2 = lattice.p2()
    kinetic = sum(abs(c) ** 2 * float(np.sum(p2[list(s.modes)])) for s, c in zip(states, coeffs))
    acc = np.zeros(5, dtype=complex)
    for j, ket in enumerate(states):
        cj = coeffs[j]
        if cj == 0:
            continue
        for k1, k2, k3, k4, amp, reduced in engine.terms(ket.modes):
            tgt = index.lookup(_images(reduced, k1, k2))
            ok = tgt >= 0
            if not np.any(ok):
                continue
            contrib = np.conj(coeffs[tgt[ok]]) * cj * amp[ok]
            if by_group:
                cls = engine.classify(k1[ok], k2[ok], np.full(ok.sum(), k3), np.full(ok.sum(), k4))
                acc += np.bincount(cls, weights=contrib.real, minlength=5) + \
                    1j * np.bincount(cls, weights=contrib.imag, minlength=5)
            else:
                acc[0] += contrib.sum()
    out = {"kinetic": complex(kinetic)}
    if by_group:
        out.update({PART_NAMES[g]: complex(acc[g]) for g in range(5)})
        out["interaction"] = complex(acc.sum())
    else:
        out["interaction"] = complex(acc[0])
    out["total"] = out["kinetic"] + out["interaction"]
    return out


def ladder_matrix(lattice: MomentumLattice, basis_from: Sequence[OccupationState],
                  basis_to: Sequence[OccupationState], i: int, kind: str) -> sparse.csr_matrix:
    """Matrix of a_i (kind 'a') or a_i^+ (kind 'adag') between two sector bases."""
    index = {s: k for k, s in enumerate(basis_to)}
    rows, cols, vals = [], [], []
    for j, s in enumerate(basis_from):
        if kind == "a":
            f, out = annihilate(s.modes, i)
        elif kind == "adag":
            f, out = create(s.modes, i)
        else:
            raise DomainError("kind must be 'a' or 'adag'")
        if out is None:
            continue
        k = index.get(OccupationState(out))
        if k is not None:
            rows.append(k)
            cols.append(j)
            vals.append(f)
    return sparse.coo_matrix((vals, (rows, cols)), shape=(len(basis_to), len(basis_from))).tocsr()


@dataclass(frozen=True)
class GibbsResult:
    free_energy: float
    energies: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray
    beta: float


def exact_free_energy(H: OperatorMatrix, beta: float, guard: int = DEFAULT.dense_guard) -> GibbsResult:
    """-beta^-1 ln Tr e^{-beta H} by dense diagonalisation."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    if H.dim > guard:
        raise SizeError("dense diagonalisation guard exceeded", H.dim)
    dense = H.dense()
    dense = 0.5 * (dense + dense.conj().T)
    e, v = np.linalg.eigh(dense)
    lse = logsumexp(-beta * e)
    weights = np.exp(-beta * e - lse)
    return GibbsResult(float(-lse / beta), e, v, weights, beta)


def entropy_from_gram(weights: Sequence[float], gram: np.ndarray, tol: float = DEFAULT.weight_sum) -> float:
    """Entropy of sum_i g_i |psi_i><psi_i| from the overlaps <psi_i|psi_j>."""
    g = np.asarray(weights, dtype=float)
    if np.any(g < 0):
        raise DomainError("weights must be nonnegative")
    if abs(g.sum() - 1.0) > tol:
        raise DomainError(f"weights sum to {g.sum():.12g}, not 1")
    sq = np.sqrt(g)
    lam = np.linalg.eigvalsh(sq[:, None] * np.asarray(gram) * sq[None, :])
    lam = lam[lam > 1e-300]
    return float(-np.sum(lam * np.log(lam))) + 0.0


def entropy_of_mixture(weights: Sequence[float], pure_states, tol: float = DEFAULT.weight_sum) -> float:
    """Von Neumann entropy of sum_i g_i |psi_i><psi_i| via the Gram-weighted matrix.

    ``pure_states`` holds one state vector per row; they need not be orthogonal.
    """
    psi = np.atleast_2d(np.asarray(pure_states))
    if psi.shape[0] != len(weights):
        raise DomainError("one pure state (row) per weight required")
    return entropy_from_gram(weights, psi.conj() @ psi.T, tol)
