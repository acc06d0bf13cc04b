"""Thermal-state fidelity of the square-lattice Ising model from its density of states.

For a classical (commuting) ensemble the fidelity between Boltzmann states
reduces to partition-function ratios, and its susceptibility to the energy
or magnetization fluctuation: chi_F = C_v / (4 beta^2) for temperature
driving and chi_F = beta * chi / 4 for a uniform field.

Energies are stored as integers in units of J (``E = -J * sum s_i s_j`` with
each periodic bond counted once); magnetizations are integer spin sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import CoverageError, SizingError

MAX_SPINS = 25
FILE_TAG = "# fidsus-dos v1"


@dataclass(frozen=True)
class DensityOfStates:
    """Tabulated ln g over energy bins (optionally joint with magnetization).

    ``energies`` are in units of J. ``counts`` holds exact integer
    degeneracies for enumerated tables; Wang-Landau tables only carry
    ``ln_g`` (fixed up to an additive constant, set by ln g(E_min) = ln 2).
    """

    energies: np.ndarray
    ln_g: np.ndarray
    magnetizations: np.ndarray | None = None
    counts: np.ndarray | None = None
    kind: str = "exact"
    Lx: int = 0
    Ly: int = 0
    J: float = 1.0
    boundary: str = "periodic"
    history: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("exact", "wang_landau"):
            raise ValueError(f"unknown dos kind {self.kind!r}")
        if len(self.energies) != len(self.ln_g):
            raise ValueError("energies and ln_g lengths differ")
        if self.magnetizations is not None and len(self.magnetizations) != len(self.energies):
            raise ValueError("magnetizations and energies lengths differ")

    @property
    def n_sites(self) -> int:
        return self.Lx * self.Ly

    @property
    def has_magnetization(self) -> bool:
        return self.magnetizations is not None

    @property
    def energy(self) -> np.ndarray:
        """Physical energies J * E."""
        return self.J * self.energies.astype(np.float64)

    def marginal_energy(self) -> "DensityOfStates":
        """Sum out magnetization, leaving g(E)."""
        if not self.has_magnetization:
            return self
        levels = np.unique(self.energies)
        idx = np.searchsorted(levels, self.energies)
        ln_g = np.array([_logsumexp(self.ln_g[idx == i]) for i in range(len(levels))])
        counts = None
        if self.counts is not None:
            counts = np.zeros(len(levels), dtype=np.int64)
            np.add.at(counts, idx, self.counts)
        return DensityOfStates(levels, ln_g, None, counts, self.kind, self.Lx, self.Ly, self.J,
                               self.boundary)


def _logsumexp(x):
    x = np.asarray(x, dtype=np.float64)
    m = np.max(x)
    return float(m + np.log(np.sum(np.exp(x - m))))


def square_bonds(Lx: int, Ly: int):
    """Periodic nearest-neighbour bonds (right and down neighbour of every site)."""
    bonds = []
    for y in range(Ly):
        for x in range(Lx):
            s = y * Lx + x
            bonds.append((s, y * Lx + (x + 1) % Lx))
            bonds.append((s, ((y + 1) % Ly) * Lx + x))
    return bonds


def enumerate_dos(Lx: int, Ly: int, J: float = 1.0, boundary: str = "periodic",
                  chunk_bits: int = 20) -> DensityOfStates:
    """Exact joint g(E, M) by enumerating all 2^(Lx*Ly) spin configurations."""
    if boundary != "periodic":
        raise ValueError("only periodic boundaries are supported")
    if Lx < 2 or Ly < 2:
        raise ValueError(f"lattice must be at least 2x2, got {Lx}x{Ly}")
    N = Lx * Ly
    if N > MAX_SPINS:
        raise SizingError(f"{N} spins exceeds the enumeration limit of {MAX_SPINS}")
    bonds = square_bonds(Lx, Ly)
    nb = len(bonds)
    # bond sum S in [-nb, nb], magnetization in [-N, N]
    table = np.zeros((2 * nb + 1, 2 * N + 1), dtype=np.int64)
    chunk = 1 << min(chunk_bits, N)
    for start in range(0, 1 << N, chunk):
        c = np.arange(start, start + chunk, dtype=np.int64)
        unsat = np.zeros(chunk, dtype=np.int64)
        for i, j in bonds:
            unsat += ((c >> i) ^ (c >> j)) & 1
        ones = np.zeros(chunk, dtype=np.int64)
        for i in range(N):
            ones += (c >> i) & 1
        S = nb - 2 * unsat
        M = N - 2 * ones  # bit set = spin down
        np.add.at(table, (S + nb, M + N), 1)
    s_idx, m_idx = np.nonzero(table)
    counts = table[s_idx, m_idx]
    E = -(s_idx - nb)
    M = m_idx - N
    order = np.lexsort((M, E))
    E, M, counts = E[order], M[order], counts[order]
    return DensityOfStates(E.astype(np.int64), np.log(counts.astype(np.float64)), M.astype(np.int64),
                           counts.astype(np.int64), "exact", Lx, Ly, float(J), boundary)


@numba.njit(cache=True)
def _seed_walker(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _walk(spins, b, ln_g, hist, visited, ln_f, nsteps, neighbours):
    """Advance the walker ``nsteps`` single-spin-flip proposals; returns the final bin."""
    n = spins.shape[0]
    for _ in range(nsteps):
        i = np.random.randint(n)
        si = spins[i]
        local = 0
        for k in range(neighbours.shape[1]):
            local += spins[neighbours[i, k]]
        # flipping si changes the bond sum by -2 si local, i.e. the bin by +si local
        b_new = b + si * local
        d = ln_g[b] - ln_g[b_new]
        if d >= 0.0 or np.random.random() < np.exp(d):
            spins[i] = -si
            b = b_new
        ln_g[b] += ln_f
        hist[b] += 1
        visited[b] = True
    return b


def wang_landau(Lx: int, Ly: int, J: float = 1.0, flatness: float = 0.8, ln_f_final: float = 1e-8,
                seed: int = 0, ln_f_initial: float = 1.0, check_steps: int = 1_600_000,
                max_checks_per_stage: int = 200) -> DensityOfStates:
    """Flat-histogram estimate of ln g(E) with a single-spin-flip walker.

    Each stage adds ln f to the current bin after every proposal and ends
    once every visited bin has at least ``flatness`` times the mean count;
    ln f is then halved and the histogram reset. Flatness is checked every
    ``check_steps`` proposals; the final error of the halving schedule
    shrinks roughly as 1/sqrt(check_steps). A stage still not flat after
    ``max_checks_per_stage`` checks raises CoverageError.
    """
    if not 0 < flatness < 1:
        raise ValueError(f"flatness must lie in (0, 1), got {flatness}")
    if not ln_f_final > 0:
        raise ValueError(f"ln_f_final must be positive, got {ln_f_final}")
    if Lx < 2 or Ly < 2:
        raise ValueError(f"lattice must be at least 2x2, got {Lx}x{Ly}")
    N = Lx * Ly
    bonds = square_bonds(Lx, Ly)
    nb = len(bonds)
    neighbours = [[] for _ in range(N)]
    for i, j in bonds:
        neighbours[i].append(j)
        neighbours[j].append(i)
    neighbours = np.array(neighbours, dtype=np.int64)

    spins = np.where(np.random.default_rng(seed).random(N) < 0.5, -1, 1).astype(np.int64)
    _seed_walker(seed)
    S = int(sum(spins[i] * spins[j] for i, j in bonds))
    # bin k counts unsatisfied bonds: S = nb - 2k
    b = (nb - S) // 2
    ln_g = np.zeros(nb + 1)
    visited = np.zeros(nb + 1, dtype=np.bool_)
    ln_f = ln_f_initial
    history = []
    while ln_f >= ln_f_final:
        hist = np.zeros(nb + 1, dtype=np.int64)
        for check in range(1, max_checks_per_stage + 1):
            b = _walk(spins, b, ln_g, hist, visited, ln_f, check_steps, neighbours)
            counts = hist[visited]
            ratio = counts.min() / counts.mean()
            if ratio >= flatness:
                break
        else:
            low = [int(-(nb - 2 * k)) for k in np.nonzero(visited)[0]
                   if hist[k] < flatness * counts.mean()]
            raise CoverageError(
                f"histogram not flat after {check} checks at ln f = {ln_f:g}; "
                f"under-visited energies (units of J): {low}", missing=low)
        history.append((ln_f, check * check_steps, float(ratio)))
        ln_f /= 2.0

    keep = np.nonzero(visited)[0]
    E = -(nb - 2 * keep)
    lg = ln_g[keep]
    order = np.argsort(E)
    E, lg = E[order].astype(np.int64), lg[order]
    lg = lg - lg[0] + math.log(2.0)
    return DensityOfStates(E, lg, None, None, "wang_landau", Lx, Ly, float(J), "periodic",
                           tuple(history))


def _exponent(dos: DensityOfStates, beta: float, h: float) -> np.ndarray:
    x = dos.ln_g - beta * dos.energy
    if h != 0.0:
        if not dos.has_magnetization:
            raise ValueError("a nonzero field needs a magnetization-resolved dos")
        x = x + beta * h * dos.magnetizations
    return x


def log_partition_function(dos: DensityOfStates, beta: float, h: float = 0.0) -> float:
    if len(dos.energies) == 0:
        raise ValueError("empty density of states")
    return _logsumexp(_exponent(dos, beta, h))


def partition_function(dos: DensityOfStates, beta: float, h: float = 0.0) -> float:
    """Z = sum g(E, M) exp(-beta (E - h M)), accumulated with a max shift."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return math.exp(log_partition_function(dos, beta, h))


def boltzmann_weights(dos: DensityOfStates, beta: float, h: float = 0.0) -> np.ndarray:
    x = _exponent(dos, beta, h)
    p = np.exp(x - np.max(x))
    return p / p.sum()


def moments(dos: DensityOfStates, beta: float, h: float = 0.0) -> dict:
    """Mean and variance of E (and M when resolved) in the Boltzmann ensemble."""
    p = boltzmann_weights(dos, beta, h)
    E = dos.energy
    mE = float(p @ E)
    out = {"E": mE, "E2": float(p @ E ** 2), "varE": float(p @ (E - mE) ** 2)}
    if dos.has_magnetization:
        M = dos.magnetizations.astype(np.float64)
        mM = float(p @ M)
        out.update(M=mM, M2=float(p @ M ** 2), varM=float(p @ (M - mM) ** 2))
    return out


def specific_heat(dos, beta):
    """C_v = beta^2 (<E^2> - <E>^2), total (not per site)."""
    return beta ** 2 * moments(dos, beta)["varE"]


def magnetic_susceptibility(dos, beta, h=0.0):
    """chi = beta (<M^2> - <M>^2), total (not per site)."""
    if not dos.has_magnetization:
        raise ValueError("dos lacks magnetization resolution")
    return beta * moments(dos, beta, h)["varM"]


def _neg2_log_fidelity(p: np.ndarray, x: np.ndarray) -> float:
    # -2 ln F = ln<e^x> + ln<e^-x> with x centred; expm1/log1p keep precision near F = 1
    x = x - p @ x
    return float(np.log1p(p @ np.expm1(x)) + np.log1p(p @ np.expm1(-x)))


def neg2_log_thermal_fidelity(dos, beta, dbeta, h=0.0) -> float:
    """-2 ln F for the states at beta -/+ dbeta/2, with F = Z(beta) / sqrt(Z(beta-) Z(beta+))."""
    if beta - abs(dbeta) / 2 <= 0:
        raise ValueError(f"beta - dbeta/2 must stay positive (beta={beta}, dbeta={dbeta})")
    p = boltzmann_weights(dos, beta, h)
    return _neg2_log_fidelity(p, 0.5 * dbeta * dos.energy)


def thermal_fidelity(dos, beta: float, dbeta: float, h: float = 0.0) -> float:
    return float(np.exp(-0.5 * neg2_log_thermal_fidelity(dos, beta, dbeta, h)))


def neg2_log_field_fidelity(dos, beta, h, dh) -> float:
    """-2 ln F for the states at fields h -/+ dh/2, with F = Z(h) / sqrt(Z(h-) Z(h+))."""
    if not dos.has_magnetization:
        raise ValueError("dos lacks magnetization resolution")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    p = boltzmann_weights(dos, beta, h)
    return _neg2_log_fidelity(p, 0.5 * beta * dh * dos.magnetizations.astype(np.float64))


def field_fidelity(dos, beta, h, dh) -> float:
    return float(np.exp(-0.5 * neg2_log_field_fidelity(dos, beta, h, dh)))


@dataclass(frozen=True)
class ThermalSusceptibility:
    beta: float
    h: float
    chi_f: float                 # fluctuation formula
    chi_f_fd: float              # Richardson-refined -2 ln F / d^2
    step: float
    error_estimate: float        # |chi(d/2) - chi(d)| of the finite difference

    @property
    def rel_deviation(self) -> float:
        if self.chi_f == 0:
            return abs(self.chi_f_fd)
        return abs(self.chi_f_fd / self.chi_f - 1.0)


def _richardson(f, d):
    full = f(d) / d ** 2
    half = f(d / 2) / (d / 2) ** 2
    return (4 * half - full) / 3, abs(half - full)


def chi_f_temperature(dos, beta: float, dbeta: float = 1e-3) -> ThermalSusceptibility:
    """chi_F = C_v / (4 beta^2), with the finite-difference value alongside."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    var = moments(dos, beta)["varE"]
    if var < 0:
        raise AssertionError(f"negative energy variance {var}")
    fd, err = _richardson(lambda d: neg2_log_thermal_fidelity(dos, beta, d), dbeta)
    return ThermalSusceptibility(beta, 0.0, var / 4.0, fd, dbeta, err)


def chi_f_field(dos, beta: float, h: float = 0.0, dh: float = 1e-3) -> ThermalSusceptibility:
    """chi_F = beta * chi / 4 for field driving, with the finite-difference value alongside."""
    chi = magnetic_susceptibility(dos, beta, h) if beta > 0 else 0.0
    fd, err = _richardson(lambda d: neg2_log_field_fidelity(dos, beta, h, d), dh)
    return ThermalSusceptibility(beta, h, beta * chi / 4.0, fd, dh, err)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_dos(dos: DensityOfStates, path) -> None:
    """Write a dos as text: header lines, then ``E M ln_g`` per bin (M is ``NA`` if unresolved)."""
    lines = [FILE_TAG,
             f"# kind = {dos.kind}",
             f"# Lx = {dos.Lx}",
             f"# Ly = {dos.Ly}",
             f"# J = {_fmt(dos.J)}",
             f"# boundary = {dos.boundary}",
             "# columns = E M ln_g"]
    for k in range(len(dos.energies)):
        m = "NA" if dos.magnetizations is None else str(int(dos.magnetizations[k]))
        lines.append(f"{int(dos.energies[k])} {m} {_fmt(dos.ln_g[k])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dos(path) -> DensityOfStates:
    meta, E, M, lg = {}, [], [], []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" in line:
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            continue
        e, m, g = line.split()
        E.append(int(e))
        M.append(None if m == "NA" else int(m))
        lg.append(float(g))
    has_m = bool(M) and all(m is not None for m in M)
    ln_g = np.array(lg)
    kind = meta.get("kind", "exact")
    counts = np.rint(np.exp(ln_g)).astype(np.int64) if kind == "exact" else None
    return DensityOfStates(np.array(E, dtype=np.int64), ln_g,
                           np.array(M, dtype=np.int64) if has_m else None, counts, kind,
                           int(meta.get("Lx", 0)), int(meta.get("Ly", 0)),
                           float(meta.get("J", 1.0)), meta.get("boundary", "periodic"))
