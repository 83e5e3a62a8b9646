"""Truncated Bose statistics, trial mixtures and the variational free energy.

The reference state is a product of truncated geometric distributions on the
infrared and low bands. Fixing the number of particles in those bands and
filling the rest into the zero mode gives a canonical mixture of occupation
states; replacing each occupation state by its pair-excitation family gives
the trial state whose free energy is compared against exact diagonalisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .errors import ConstructionError, DomainError, SizeError
from .excitations import BoxCover, ExcitationFamily, ShellPartition, generate_family, n_alpha
from .fock import (GibbsResult, MomentumLattice, OccupationState, OperatorMatrix, QuarticEngine,
                   entropy_from_gram, exact_free_energy, sparse_expectation)
from .thermo import mode_log_partition
from .tolerances import DEFAULT


def reduced_density(rho: float, L: float) -> float:
    """rho (1 - L^{-1/2}), the density used to fix the chemical potential."""
    if not (rho > 0 and L > 1):
        raise DomainError("need rho > 0 and L > 1")
    return rho * (1.0 - L ** -0.5)


@dataclass(frozen=True)
class TruncatedModeEnsemble:
    """Independent modes with energies E_k = p_k^2 - mu and occupation caps C_k."""

    modes: tuple[int, ...]
    energies: np.ndarray
    caps: np.ndarray
    beta: float
    mu: float
    lattice: MomentumLattice = field(repr=False)

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if len(self.modes) != len(self.energies) or len(self.modes) != len(self.caps):
            raise DomainError("modes, energies and caps must align")
        if np.any(np.asarray(self.caps) < 1):
            raise DomainError("every cap must be at least 1")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def log_pmfs(self) -> list[np.ndarray]:
        """Normalised log-probabilities of n = 0..C_k for each mode."""
        out = []
        for e, c in zip(self.energies, self.caps):
            lw = -self.beta * e * np.arange(int(c) + 1)
            out.append(lw - logsumexp(lw))
        return out

    def scaled(self, factor: int) -> "TruncatedModeEnsemble":
        return TruncatedModeEnsemble(self.modes, self.energies, np.asarray(self.caps) * int(factor),
                                     self.beta, self.mu, self.lattice)


def cutoff_profile(shells: ShellPartition, beta: float, mu: float) -> dict[int, int]:
    """Caps ceil(m_c^{1/3} / (beta E_k)) on the infrared band and m_c on the low band."""
    if mu > 0:
        raise DomainError("chemical potential must be nonpositive")
    if not beta > 0:
        raise DomainError("beta must be positive")
    p2 = shells.lattice.p2()
    caps: dict[int, int] = {}
    root = shells.m_c ** (1.0 / 3.0)
    for k in shells.PI:
        be = beta * (p2[k] - mu)
        if be <= 0.0:
            raise DomainError(f"beta*E vanishes on infrared mode {shells.lattice.modes[k]}")
        caps[k] = max(1, int(math.ceil(root / be - 1e-12)))
    for k in shells.PL:
        caps[k] = int(shells.m_c)
    return caps


def build_ensemble(shells: ShellPartition, beta: float, mu: float) -> TruncatedModeEnsemble:
    caps = cutoff_profile(shells, beta, mu)
    modes = tuple(sorted(caps))
    p2 = shells.lattice.p2()
    energies = np.array([p2[k] - mu for k in modes], dtype=float)
    return TruncatedModeEnsemble(modes, energies, np.array([caps[k] for k in modes], dtype=np.int64),
                                 float(beta), float(mu), shells.lattice)


@dataclass(frozen=True)
class EnsembleStats:
    free_energy: float
    mean_total: float
    cap_square_sum: float
    means: np.ndarray
    log_partition: np.ndarray


def ensemble_stats(ens: TruncatedModeEnsemble) -> EnsembleStats:
    """-beta^-1 sum ln Z_k + mu sum <n_k>, the mean particle number and sum C_k^2."""
    logs = np.empty(ens.n_modes)
    means = np.empty(ens.n_modes)
    for j, (e, c) in enumerate(zip(ens.energies, ens.caps)):
        logs[j], means[j] = mode_log_partition(ens.beta * float(e), int(c))
    F = -float(logs.sum()) / ens.beta + ens.mu * float(means.sum())
    return EnsembleStats(F, float(means.sum()), float(np.sum(np.asarray(ens.caps, dtype=float) ** 2)), means, logs)


def hoeffding_tail(ens: TruncatedModeEnsemble, t: float) -> float:
    """Bound 2 exp(-2 t^2 / sum C_k^2) on P(|N - <N>| >= t)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    denom = float(np.sum(np.asarray(ens.caps, dtype=float) ** 2))
    return 2.0 * math.exp(-2.0 * t * t / denom)


def sample_totals(ens: TruncatedModeEnsemble, n_samples: int, seed: int) -> np.ndarray:
    """Total occupation of independent draws from the product ensemble."""
    rng = np.random.default_rng(seed)
    total = np.zeros(n_samples, dtype=np.int64)
    for lp in ens.log_pmfs():
        cdf = np.cumsum(np.exp(lp))
        cdf[-1] = 1.0
        total += np.searchsorted(cdf, rng.random(n_samples), side="right")
    return total


def sector_distribution(ens: TruncatedModeEnsemble) -> np.ndarray:
    """Probability that the ensemble holds exactly m particles, m = 0..sum C_k."""
    dist = np.ones(1)
    for lp in ens.log_pmfs():
        dist = np.convolve(dist, np.exp(lp))
    return dist


def choose_sector(dist: np.ndarray, N_total: int, target: float | None = None) -> int:
    """Most probable admissible sector m <= N_total; ties go toward ``target``."""
    top = min(N_total, len(dist) - 1)
    admissible = dist[: top + 1]
    if admissible.size == 0 or not np.any(admissible > 0):
        raise ConstructionError("no admissible particle-number sector")
    best = admissible.max()
    ties = np.nonzero(admissible >= best * (1.0 - 1e-12))[0]
    ref = float(N_total if target is None else target)
    return int(min(ties, key=lambda m: (abs(m - ref), m)))


def _enumerate_sector(caps: Sequence[int], m: int):
    """All occupation vectors with n_k <= caps[k] summing to m."""
    if not caps:
        if m == 0:
            yield ()
        return
    room = sum(caps[1:])
    for n in range(max(0, m - room), min(caps[0], m) + 1):
        for rest in _enumerate_sector(caps[1:], m - n):
            yield (n,) + rest


def _sample_sector(log_pmfs: list[np.ndarray], m: int, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws from the product ensemble conditioned on total m."""
    K = len(log_pmfs)
    pm = [np.exp(lp) for lp in log_pmfs]
    suffix = [None] * (K + 1)
    suffix[K] = np.ones(1)
    for j in range(K - 1, -1, -1):
        suffix[j] = np.convolve(pm[j], suffix[j + 1])
    out = np.zeros((n_samples, K), dtype=np.int64)
    remaining = np.full(n_samples, m, dtype=np.int64)
    for j in range(K):
        nxt = suffix[j + 1]
        n = np.arange(len(pm[j]))
        for s in range(n_samples):
            r = remaining[s]
            rest = r - n
            ok = (rest >= 0) & (rest < len(nxt))
            prob = np.where(ok, pm[j] * nxt[np.clip(rest, 0, len(nxt) - 1)], 0.0)
            prob /= prob.sum()
            out[s, j] = rng.choice(len(prob), p=prob)
        remaining -= out[:, j]
    return out


@dataclass
class Gamma0:
    mixture: "MixtureState"
    sector: int
    sector_weight: float
    exact: bool
    seed: int | None


def build_gamma0(ens: TruncatedModeEnsemble, N_total: int, shells: ShellPartition, seed: int = 0,
                 target: float | None = None, max_enumerate: int = 8, n_samples: int = 2000) -> Gamma0:
    """Fixed-number slice of the product ensemble, padded with zero-mode particles.

    With at most ``max_enumerate`` modes every configuration of the chosen
    sector is listed with its Boltzmann weight. Otherwise configurations are
    drawn from the exact conditional law and the distinct draws are weighted
    by their Boltzmann factors.
    """
    if N_total < 0:
        raise DomainError("particle number must be nonnegative")
    dist = sector_distribution(ens)
    m0 = choose_sector(dist, N_total, target)
    caps = [int(c) for c in ens.caps]
    if ens.n_modes <= max_enumerate:
        configs = np.array(list(_enumerate_sector(caps, m0)), dtype=np.int64).reshape(-1, ens.n_modes)
        exact, used_seed = True, None
    else:
        rng = np.random.default_rng(seed)
        configs = np.unique(_sample_sector(ens.log_pmfs(), m0, n_samples, rng), axis=0)
        exact, used_seed = False, seed
    if configs.shape[0] == 0:
        raise ConstructionError(f"sector m0={m0} has no configurations")
    logw = -ens.beta * (configs @ np.asarray(ens.energies, dtype=float))
    g = np.exp(logw - logsumexp(logw))
    alphas = []
    pad = N_total - m0
    for row in configs:
        modes = [shells.P0] * pad
        for k, n in zip(ens.modes, row):
            modes.extend([k] * int(n))
        alphas.append(OccupationState(tuple(sorted(modes))))
    return Gamma0(MixtureState.from_occupations(g, alphas, shells.lattice), m0, float(dist[m0]), exact, used_seed)


class MixtureState:
    """sum_i g_i |Psi_i><Psi_i| with each Psi_i a sparse combination of occupation states."""

    def __init__(self, weights: Sequence[float], components: Sequence[tuple[Sequence[OccupationState], np.ndarray]],
                 lattice: MomentumLattice, tol: float = DEFAULT.weight_sum):
        g = np.asarray(weights, dtype=float)
        if len(g) != len(components):
            raise DomainError("one weight per component required")
        if np.any(g < 0):
            raise DomainError("weights must be nonnegative")
        if abs(g.sum() - 1.0) > tol:
            raise DomainError(f"weights sum to {g.sum():.15g}")
        self.weights = g
        self.components = [(list(s), np.asarray(c, dtype=complex)) for s, c in components]
        self.lattice = lattice
        self._coeff = None

    @classmethod
    def from_occupations(cls, weights, alphas: Sequence[OccupationState], lattice: MomentumLattice) -> "MixtureState":
        return cls(weights, [([a], np.ones(1)) for a in alphas], lattice)

    @classmethod
    def from_vectors(cls, weights, vectors: np.ndarray, basis: Sequence[OccupationState],
                     lattice: MomentumLattice) -> "MixtureState":
        """Components given as dense columns over ``basis``."""
        vecs = np.asarray(vectors)
        comps = []
        for j in range(vecs.shape[1]):
            nz = np.nonzero(np.abs(vecs[:, j]) > 0)[0]
            comps.append(([basis[i] for i in nz], vecs[nz, j]))
        return cls(weights, comps, lattice)

    def with_families(self, shells: ShellPartition, boxes: BoxCover, w: np.ndarray) -> "MixtureState":
        """Replace every single occupation state by its pair-excitation family."""
        comps = []
        for states, coeffs in self.components:
            if len(states) != 1:
                raise DomainError("families can only be attached to occupation-state components")
            fam: ExcitationFamily = generate_family(states[0], shells, boxes, w)
            comps.append((fam.states, fam.coefficients))
        return MixtureState(self.weights, comps, self.lattice)

    @property
    def n_components(self) -> int:
        return len(self.components)

    def coefficient_matrix(self) -> tuple[sparse.csr_matrix, list[OccupationState]]:
        """Rows are components, columns the union of occupation states."""
        if self._coeff is None:
            index: dict[OccupationState, int] = {}
            rows, cols, vals = [], [], []
            for r, (states, coeffs) in enumerate(self.components):
                for s, c in zip(states, coeffs):
                    rows.append(r)
                    cols.append(index.setdefault(s, len(index)))
                    vals.append(c)
            mat = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_components, len(index)), dtype=complex)
            self._coeff = (mat, list(index))
        return self._coeff

    def gram(self) -> np.ndarray:
        c, _ = self.coefficient_matrix()
        return (c.conj() @ c.T).toarray()

    def norms(self) -> np.ndarray:
        return np.real(np.diag(self.gram()))

    def entropy(self, guard: int = DEFAULT.dense_guard) -> float:
        if self.n_components > guard:
            raise SizeError("too many components for the dense Gram spectrum", self.n_components)
        return entropy_from_gram(self.weights, self.gram())

    def energy(self, H: OperatorMatrix) -> float:
        if H.lattice is not self.lattice and H.lattice != self.lattice:
            raise DomainError("Hamiltonian and mixture live on different lattices")
        total = 0.0
        for g, (states, coeffs) in zip(self.weights, self.components):
            if g == 0.0:
                continue
            v = np.zeros(H.dim, dtype=complex)
            for s, c in zip(states, coeffs):
                j = H.index.get(s)
                if j is None:
                    raise DomainError("mixture component lies outside the Hamiltonian's basis")
                v[j] = c
            total += g * H.expectation(v).real
        return float(total)

    def energy_sparse(self, engine: QuarticEngine) -> float:
        """Same as ``energy`` but without a full basis."""
        return float(sum(g * sparse_expectation(engine, s, c)["total"].real
                         for g, (s, c) in zip(self.weights, self.components) if g > 0))


@dataclass(frozen=True)
class EntropyBound:
    s0: float
    a_bound: float
    lower: float
    exact: float | None

    @property
    def holds(self) -> bool:
        return self.exact is None or self.exact >= self.lower - 1e-12


def entropy_bound(gamma: MixtureState, exact: bool = True) -> EntropyBound:
    """-sum g ln g, the row-sum bound on the largest Gram eigenvalue, and S >= S0 - ln A.

    A is the product of the largest column sum and the largest row sum of
    |<occupation state|Psi_i>|, which dominates the operator norm of the Gram
    matrix. Components must be normalised.
    """
    norms = gamma.norms()
    if np.max(np.abs(norms - 1.0)) > DEFAULT.normalization:
        raise DomainError("entropy bound needs normalised components")
    g = gamma.weights[gamma.weights > 0]
    s0 = float(-np.sum(g * np.log(g))) + 0.0
    c, _ = gamma.coefficient_matrix()
    mag = abs(c)
    a = float(np.max(mag.sum(axis=0))) * float(np.max(mag.sum(axis=1)))
    lower = s0 - math.log(a)
    s = gamma.entropy() if exact and gamma.n_components <= DEFAULT.dense_guard else None
    return EntropyBound(s0, a, lower, s)


def gibbs_mixture(H: OperatorMatrix, beta: float) -> tuple[MixtureState, GibbsResult]:
    """The exact Gibbs state written as a mixture of eigenvectors."""
    res = exact_free_energy(H, beta)
    return MixtureState.from_vectors(res.weights, res.vectors, H.basis, H.lattice), res


@dataclass(frozen=True)
class VariationalReport:
    energy: float
    entropy: EntropyBound
    beta: float
    f_var: float
    f_var_bound: float
    f_exact: float
    volume: float
    f0: float | None
    delta_f: float | None

    @property
    def gap(self) -> float:
        return self.f_var - self.f_exact

    @property
    def holds(self) -> bool:
        return self.f_var >= self.f_exact - 1e-10 and self.f_var_bound >= self.f_exact - 1e-10

    @property
    def excess(self) -> float | None:
        """(F_var - f0 |Lambda|) - delta_f |Lambda|."""
        if self.f0 is None or self.delta_f is None:
            return None
        return self.f_var - self.f0 * self.volume - self.delta_f * self.volume

    def rows(self) -> list[tuple[str, float]]:
        out = [("U", self.energy), ("S_exact", float("nan") if self.entropy.exact is None else self.entropy.exact),
               ("S0", self.entropy.s0), ("A_rowsum", self.entropy.a_bound), ("S_lower", self.entropy.lower),
               ("F_var", self.f_var), ("F_var_bound", self.f_var_bound), ("F_exact", self.f_exact),
               ("gap", self.gap)]
        if self.f0 is not None:
            out.append(("f0_volume", self.f0 * self.volume))
        if self.delta_f is not None:
            out.append(("delta_f_volume", self.delta_f * self.volume))
        if self.excess is not None:
            out.append(("excess_residual", self.excess))
        return out


def variational_report(gamma: MixtureState, H: OperatorMatrix, beta: float, f0: float | None = None,
                       delta_f: float | None = None, exact: GibbsResult | None = None) -> VariationalReport:
    """U - S/beta for the trial state against -beta^-1 ln Tr e^{-beta H}.

    F_var uses the exact mixture entropy when it is available; F_var_bound
    always uses the row-sum lower bound and can only be larger.
    """
    if H.lattice is not gamma.lattice and H.lattice != gamma.lattice:
        raise DomainError("Hamiltonian and mixture live on different lattices")
    U = gamma.energy(H)
    ent = entropy_bound(gamma)
    s_best = ent.exact if ent.exact is not None else ent.lower
    res = exact if exact is not None else exact_free_energy(H, beta)
    return VariationalReport(U, ent, beta, U - s_best / beta, U - ent.lower / beta, res.free_energy,
                             gamma.lattice.volume, f0, delta_f)


def pairing_aggregate(gamma: MixtureState, shells: ShellPartition, N_total: int, rho: float,
                      rho_c: float) -> tuple[float, float, float]:
    """(sum g N_alpha / N^2, 2 - [1 - rho_c/rho]_+^2, difference) over occupation components."""
    total = 0.0
    for g, (states, _) in zip(gamma.weights, gamma.components):
        if len(states) != 1:
            raise DomainError("aggregate is defined on occupation-state mixtures")
        total += g * n_alpha(states[0], shells)
    value = total / float(N_total) ** 2
    excess = max(0.0, 1.0 - rho_c / rho)
    target = 2.0 - excess * excess
    return value, target, value - target
