"""Fock-space basis of a fixed (N_up, N_dn) sector on an L-site chain.

Configurations are pairs of L-bit words; bit ``j`` of the up-word is the
occupation of site ``j`` with spin up. Operators are ordered with all up
operators to the left of all down operators, and sites ascending within a
species, so hopping of one species never picks up a sign from the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .errors import SizingError

UP, DOWN = 0, 1
MAX_SITES = 32
MAX_DIM = 50_000_000


def spin_index(spin) -> int:
    if spin in (UP, "up", "u", "↑"):
        return UP
    if spin in (DOWN, "down", "dn", "d", "↓"):
        return DOWN
    raise ValueError(f"unknown spin label {spin!r}")


def words_with_popcount(L: int, n: int) -> np.ndarray:
    """All L-bit words with exactly ``n`` bits set, ascending."""
    words = [sum(1 << s for s in sites) for sites in combinations(range(L), n)]
    return np.array(sorted(words), dtype=np.int64)


def popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def hop_word(word: int, i: int, j: int, L: int):
    """Apply c^dag_i c_j to a single-species occupation word.

    Returns ``(new_word, sign)`` or ``None`` when the move is blocked (site
    ``j`` empty or site ``i`` already occupied).
    """
    if not (0 <= i < L and 0 <= j < L):
        raise ValueError(f"sites ({i}, {j}) out of range for L={L}")
    if i == j:
        raise ValueError("hop requires distinct sites")
    if not (word >> j) & 1 or (word >> i) & 1:
        return None
    lo, hi = min(i, j), max(i, j)
    between = word & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
    sign = -1 if bin(between).count("1") % 2 else 1
    return word ^ ((1 << i) | (1 << j)), sign


@dataclass(frozen=True)
class FockBasis:
    """Sorted configurations of a fixed-filling sector.

    ``up_words`` and ``dn_words`` list the single-species words ascending;
    the full basis is their product ordered by ``up * 2**L + dn``, so the
    ordinal of ``(up_words[a], dn_words[b])`` is ``a * len(dn_words) + b``.
    """

    L: int
    n_up: int
    n_dn: int
    up_words: np.ndarray = field(repr=False)
    dn_words: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.up_words) * len(self.dn_words)

    def __len__(self):
        return self.dim

    @property
    def states(self) -> np.ndarray:
        """(dim, 2) array of (up-word, down-word), in basis order."""
        up = np.repeat(self.up_words, len(self.dn_words))
        dn = np.tile(self.dn_words, len(self.up_words))
        return np.stack([up, dn], axis=1)

    def keys(self) -> np.ndarray:
        st = self.states
        return (st[:, 0] << self.L) + st[:, 1]

    def index(self, config) -> int:
        """Ordinal of a configuration ``(up_word, dn_word)``."""
        up, dn = (int(c) for c in config)
        a = int(np.searchsorted(self.up_words, up))
        b = int(np.searchsorted(self.dn_words, dn))
        if (a >= len(self.up_words) or self.up_words[a] != up
                or b >= len(self.dn_words) or self.dn_words[b] != dn):
            raise KeyError(f"configuration {config!r} not in sector")
        return a * len(self.dn_words) + b

    def hop(self, config, i: int, j: int, spin):
        """c^dag_{i,spin} c_{j,spin} on ``config``; ``None`` if blocked."""
        up, dn = (int(c) for c in config)
        if spin_index(spin) == UP:
            res = hop_word(up, i, j, self.L)
            return None if res is None else ((res[0], dn), res[1])
        res = hop_word(dn, i, j, self.L)
        return None if res is None else ((up, res[0]), res[1])

    def double_occupancy(self) -> np.ndarray:
        """Number of doubly occupied sites for each basis state."""
        st = self.states
        return popcount(st[:, 0] & st[:, 1])


def build_basis(L: int, n_up: int, n_dn: int, max_dim: int = MAX_DIM) -> FockBasis:
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if L > MAX_SITES:
        raise SizingError(f"L={L} exceeds the {MAX_SITES}-site word limit")
    for n in (n_up, n_dn):
        if not 0 <= n <= L:
            raise ValueError(f"electron count {n} outside [0, {L}]")
    dim = comb(L, n_up) * comb(L, n_dn)
    if dim > max_dim:
        raise SizingError(f"sector dimension {dim} exceeds limit {max_dim}")
    return FockBasis(L, n_up, n_dn, words_with_popcount(L, n_up), words_with_popcount(L, n_dn))
