"""Sparse Hubbard-chain operators H0 (hopping) and HI (double occupancy)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import FockBasis, build_basis, hop_word

BOUNDARIES = ("periodic", "antiperiodic", "open")


def auto_boundary(L: int) -> str:
    """Closed-shell boundary for a half-filled chain: periodic when L = 2 mod 4."""
    return "antiperiodic" if L % 4 == 0 else "periodic"


@dataclass(frozen=True)
class ModelSpec:
    L: int
    U: float = 0.0
    t: float = 1.0
    boundary: str = "periodic"
    n_up: int | None = None
    n_dn: int | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if not self.t > 0:
            raise ValueError(f"hopping t must be positive, got {self.t}")
        if self.boundary == "auto":
            object.__setattr__(self, "boundary", auto_boundary(self.L))
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.n_up is None:
            object.__setattr__(self, "n_up", self.L // 2)
        if self.n_dn is None:
            object.__setattr__(self, "n_dn", self.L // 2)

    @classmethod
    def half_filled(cls, L, U=0.0, t=1.0, boundary="auto"):
        if L % 2:
            raise ValueError(f"half filling needs even L, got {L}")
        return cls(L=L, U=U, t=t, boundary=boundary, n_up=L // 2, n_dn=L // 2)

    def bonds(self):
        """Nearest-neighbour bonds as (i, j, sign); the sign only differs on the wrap bond."""
        L = self.L
        out = [(i, i + 1, 1.0) for i in range(L - 1)]
        if L > 2 and self.boundary != "open":
            out.append((L - 1, 0, 1.0 if self.boundary == "periodic" else -1.0))
        return out

    def basis(self) -> FockBasis:
        return build_basis(self.L, self.n_up, self.n_dn)


class SparseOperator:
    """Real symmetric operator in compressed-row form.

    Wraps a canonical ``scipy.sparse.csr_matrix`` (sorted indices, no
    duplicates, no stored zeros). Products run row by row in a fixed order,
    so repeated ``matvec`` calls are bit-identical.
    """

    def __init__(self, matrix, hermitian=True):
        m = sp.csr_matrix(matrix, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        self._m = m
        self.hermitian = hermitian

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def indptr(self):
        return self._m.indptr

    @property
    def indices(self):
        return self._m.indices

    @property
    def data(self):
        return self._m.data

    @property
    def nnz(self) -> int:
        return self._m.nnz

    @property
    def csr(self) -> sp.csr_matrix:
        return self._m

    def matvec(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ValueError(f"vector of shape {v.shape} does not match operator dim {self.dim}")
        return self._m @ v

    __matmul__ = matvec

    def diagonal(self):
        return self._m.diagonal()

    def to_dense(self):
        return self._m.toarray()

    def is_symmetric(self) -> bool:
        """Exact (bitwise) check that entry (i, j) equals entry (j, i)."""
        diff = self._m - self._m.T
        diff.eliminate_zeros()
        return diff.nnz == 0

    def __repr__(self):
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz})"


def _species_hopping(words: np.ndarray, spec: ModelSpec) -> sp.csr_matrix:
    """Hopping matrix -t sum c^dag c for one spin species on the given words."""
    L = spec.L
    lookup = {int(w): a for a, w in enumerate(words)}
    rows, cols, vals = [], [], []
    for a, w in enumerate(words):
        w = int(w)
        for i, j, bond_sign in spec.bonds():
            for dst, src in ((i, j), (j, i)):
                res = hop_word(w, dst, src, L)
                if res is None:
                    continue
                w2, sign = res
                rows.append(lookup[w2])
                cols.append(a)
                vals.append(-spec.t * bond_sign * sign)
    n = len(words)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def build_hubbard(spec: ModelSpec, basis: FockBasis | None = None):
    """Return ``(H0, HI)`` for the Hubbard chain described by ``spec``.

    H0 is the hopping term, HI the count of doubly occupied sites, so that
    ``H(U) = H0 + U * HI``.
    """
    if basis is None:
        basis = spec.basis()
    if (basis.L, basis.n_up, basis.n_dn) != (spec.L, spec.n_up, spec.n_dn):
        raise ValueError(
            f"basis (L={basis.L}, n_up={basis.n_up}, n_dn={basis.n_dn}) does not match model spec")
    n_u, n_d = len(basis.up_words), len(basis.dn_words)
    h_up = _species_hopping(basis.up_words, spec)
    h_dn = _species_hopping(basis.dn_words, spec)
    # up operators precede down operators, so the two species decouple into a Kronecker sum
    h0 = sp.kron(h_up, sp.identity(n_d), format="csr") + sp.kron(sp.identity(n_u), h_dn, format="csr")
    hi = sp.diags(basis.double_occupancy().astype(np.float64), format="csr")
    return SparseOperator(h0), SparseOperator(hi)


def hamiltonian_at(H0: SparseOperator, HI: SparseOperator, lam: float) -> SparseOperator:
    """H(lam) = H0 + lam * HI."""
    if H0.dim != HI.dim:
        raise ValueError(f"dimension mismatch: {H0.dim} vs {HI.dim}")
    return SparseOperator(H0.csr + lam * HI.csr, hermitian=H0.hermitian and HI.hermitian)


def matvec(H: SparseOperator, v) -> np.ndarray:
    return H.matvec(v)
