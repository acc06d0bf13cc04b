"""Fidelity susceptibility of the half-filled chain at U = 0 from particle-hole sums.

At U = 0 the ground state is a Fermi sea per spin and HI = (1/L) sum_q
rho_up(q) rho_dn(-q) only connects it to states with one particle-hole
pair per spin carrying opposite momentum transfer, each with amplitude 1/L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import auto_boundary


@dataclass(frozen=True)
class FermiSea:
    L: int
    t: float
    boundary: str
    n_up: int
    n_dn: int
    momenta: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)

    def occupied(self, n: int) -> np.ndarray:
        """Boolean mask of the ``n`` lowest single-particle levels."""
        order = np.argsort(self.energies, kind="stable")
        occ = np.zeros(self.L, dtype=bool)
        occ[order[:n]] = True
        return occ

    def shell_gap(self, n: int) -> float:
        """Single-particle gap between the n-th and (n+1)-th level (inf if nothing to excite)."""
        if n == 0 or n == self.L:
            return math.inf
        e = np.sort(self.energies)
        return float(e[n] - e[n - 1])


def fermi_sea(L: int, t: float = 1.0, boundary: str = "auto", n_up=None, n_dn=None) -> FermiSea:
    if L < 2 or L % 2:
        raise ValueError(f"L must be an even integer >= 2, got {L}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    expected = auto_boundary(L)
    if boundary == "auto":
        boundary = expected
    if boundary not in ("periodic", "antiperiodic"):
        raise ValueError(f"boundary must be periodic or antiperiodic, got {boundary!r}")
    n_up = L // 2 if n_up is None else n_up
    n_dn = L // 2 if n_dn is None else n_dn
    if n_up == n_dn == L // 2 and boundary != expected:
        raise ValueError(f"L={L} at half filling is closed-shell only with {expected} boundary")
    shift = 0.0 if boundary == "periodic" else 0.5
    k = 2 * np.pi * (np.arange(L) + shift) / L
    # a two-site ring has one bond, not two, so its band is half as wide
    eps = -(1.0 if L == 2 else 2.0) * t * np.cos(k)
    sea = FermiSea(L, t, boundary, n_up, n_dn, k, eps)
    for n in (n_up, n_dn):
        if not 0 <= n <= L:
            raise ValueError(f"filling {n} outside [0, {L}]")
        if sea.shell_gap(n) <= 1e-12 * t:
            raise ValueError(f"open shell: filling {n} on L={L} ({boundary}) is degenerate")
    return sea


def _pair_energies(occ: np.ndarray, eps: np.ndarray, q: int) -> np.ndarray:
    """Excitation energies of pairs k -> k+q (index shift q) with k occupied, k+q empty."""
    src = np.nonzero(occ)[0]
    dst = (src + q) % len(occ)
    keep = ~occ[dst]
    return eps[dst[keep]] - eps[src[keep]]


def chi_f_u0(L: int, t: float = 1.0, boundary: str = "auto", n_up=None, n_dn=None) -> float:
    """chi_F of the Hubbard chain at U = 0 (Fermi sea of each spin species).

    Sum over transfers q != 0, up pairs k -> k+q and down pairs k' -> k'-q of
    (1/L^2) / (dE_up + dE_dn)^2. Cost O(L^3); per-q partial sums are
    combined with ``math.fsum`` in ascending q order.
    """
    sea = fermi_sea(L, t, boundary, n_up, n_dn)
    occ_up, occ_dn = sea.occupied(sea.n_up), sea.occupied(sea.n_dn)
    floor = sea.shell_gap(sea.n_up) + sea.shell_gap(sea.n_dn)
    partial = []
    for q in range(1, L):
        a = _pair_energies(occ_up, sea.energies, q)
        b = _pair_energies(occ_dn, sea.energies, -q)
        if len(a) == 0 or len(b) == 0:
            continue
        denom = np.add.outer(a, b)
        if denom.min() < floor * (1 - 1e-12):
            raise AssertionError(f"denominator {denom.min()} below two-particle gap {floor}")
        partial.append(float(np.sum(denom ** -2.0)))
    return math.fsum(partial) / L ** 2


def default_ladder(L_max: int = 1906, L_min: int = 6) -> list[int]:
    """Even sizes from L_max down by successive halving (rounded down to even), ascending."""
    if L_max < L_min:
        raise ValueError(f"L_max={L_max} < L_min={L_min}")
    out = []
    L = L_max - (L_max % 2)
    while L > L_min:
        out.append(L)
        L = (L // 2) - ((L // 2) % 2)
    out.append(L_min)
    return sorted(set(out))


def chi_scaling_series(L_list, t: float = 1.0):
    """Rows ``(L, chi_F, chi_F / L, boundary)`` for each L, boundary chosen by L mod 4."""
    rows = []
    for L in L_list:
        chi = chi_f_u0(L, t)
        rows.append((L, chi, chi / L, auto_boundary(L)))
    return rows


def plateau_deviation(rows) -> float:
    """Relative change of chi_F / L between the last two rows of a scaling series."""
    if len(rows) < 2:
        raise ValueError("need at least two sizes")
    a, b = rows[-2][2], rows[-1][2]
    return abs(b - a) / abs(b)
