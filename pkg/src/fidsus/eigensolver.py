"""Ground-state and full-spectrum solvers for real symmetric sparse operators."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DegenerateGroundStateError
from .hamiltonian import SparseOperator

DENSE_THRESHOLD = 4096


def fix_sign(vec: np.ndarray) -> np.ndarray:
    """Flip ``vec`` so its largest-magnitude component is positive."""
    k = int(np.argmax(np.abs(vec)))
    return -vec if vec[k] < 0 else vec


def default_gap_tol(E0: float) -> float:
    return 1e-8 * max(1.0, abs(E0))


@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    ritz_history: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    vectors: np.ndarray = field(repr=False)  # columns are eigenvectors

    def __len__(self):
        return len(self.energies)

    @property
    def ground(self) -> GroundState:
        return GroundState(float(self.energies[0]), self.vectors[:, 0], 0.0, 0)


class Degeneracy(str, enum.Enum):
    NONDEGENERATE = "nondegenerate"
    DEGENERATE = "degenerate"


def gap_check(E0: float, E1: float, gap_tol: float | None = None) -> Degeneracy:
    if gap_tol is None:
        gap_tol = default_gap_tol(E0)
    return Degeneracy.DEGENERATE if E1 - E0 < gap_tol else Degeneracy.NONDEGENERATE


def require_nondegenerate(E0, E1, gap_tol=None, where=""):
    if gap_tol is None:
        gap_tol = default_gap_tol(E0)
    if gap_check(E0, E1, gap_tol) is Degeneracy.DEGENERATE:
        loc = f" {where}" if where else ""
        raise DegenerateGroundStateError(
            f"degenerate ground state{loc}: E1 - E0 = {E1 - E0:.3e} < {gap_tol:.1e}", gap=E1 - E0)


def dense_spectrum(H: SparseOperator, threshold: int = DENSE_THRESHOLD) -> Spectrum:
    if H.dim > threshold:
        raise ValueError(
            f"dim {H.dim} exceeds dense threshold {threshold}; use lanczos_ground instead")
    energies, vectors = np.linalg.eigh(H.to_dense())
    for n in range(vectors.shape[1]):
        vectors[:, n] = fix_sign(vectors[:, n])
    return Spectrum(energies, vectors)


def _orthogonalize(w, basis_rows, extra):
    # Gram-Schmidt against the stored basis; a second pass runs only when the
    # first one cancelled most of the norm ("twice is enough")
    for _ in range(2):
        before = np.linalg.norm(w)
        if basis_rows.shape[0]:
            w -= basis_rows.T @ (basis_rows @ w)
        for u in extra:
            w -= (u @ w) * u
        if np.linalg.norm(w) > 0.7 * before:
            break
    return w


def lanczos_ground(H: SparseOperator, tol: float = 1e-10, max_iter: int = 2000, seed: int = 0,
                   *, start=None, deflate=(), max_basis: int = 200) -> GroundState:
    """Lowest eigenpair of ``H`` by Lanczos with full reorthogonalization.

    The start vector is seeded Gaussian noise unless ``start`` is given.
    Vectors in ``deflate`` (orthonormal) are projected out at every step,
    which gives the lowest eigenpair in their orthogonal complement. When
    the Krylov basis reaches ``max_basis`` the iteration restarts from the
    current Ritz vector. ``max_iter`` bounds the total number of products.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = H.dim
    deflate = [np.asarray(u, dtype=np.float64) for u in deflate]
    if n - len(deflate) < 1:
        raise ValueError("nothing left after deflation")
    if start is None:
        v = np.random.default_rng(seed).standard_normal(n)
    else:
        v = np.array(start, dtype=np.float64)
    v = _orthogonalize(v, np.empty((0, n)), deflate)
    v /= np.linalg.norm(v)

    max_basis = max(2, min(max_basis, n - len(deflate)))
    iterations = 0
    history = []
    residual = np.inf
    while True:
        V = np.empty((max_basis, n))
        V[0] = v
        alphas, betas = [], []
        theta, y = None, None
        for k in range(max_basis):
            w = H.matvec(V[k])
            iterations += 1
            a = float(V[k] @ w)
            alphas.append(a)
            w -= a * V[k]
            if k:
                w -= betas[-1] * V[k - 1]
            w = _orthogonalize(w, V[:k + 1], deflate)
            b = float(np.linalg.norm(w))
            if len(alphas) == 1:
                theta, y = alphas[0], np.ones(1)
            else:
                vals, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas),
                                              select="i", select_range=(0, 0))
                theta, y = float(vals[0]), vecs[:, 0]
            history.append(theta)
            estimate = b * abs(y[-1])
            exhausted = b < 1e-12 * max(1.0, abs(a))
            if estimate < 0.1 * tol or exhausted or k + 1 == max_basis or iterations >= max_iter:
                break
            betas.append(b)
            V[k + 1] = w / b

        m = len(alphas)
        psi = V[:m].T @ y
        psi /= np.linalg.norm(psi)
        r = H.matvec(psi) - theta * psi
        residual = float(np.linalg.norm(r))
        if residual <= tol:
            return GroundState(theta, fix_sign(psi), residual, iterations, tuple(history))
        if iterations >= max_iter:
            raise ConvergenceError(
                f"Lanczos did not converge in {iterations} products (residual {residual:.3e} > {tol:.1e})",
                residual=residual, iterations=iterations)
        v = _orthogonalize(psi, np.empty((0, n)), deflate)
        v /= np.linalg.norm(v)


def lowest_two(H: SparseOperator, tol: float = 1e-10, max_iter: int = 2000, seed: int = 0,
               method: str = "auto", dense_threshold: int = 1000, starts=(None, None)):
    """Ground state and the next level, as ``(ground, excited)`` GroundStates.

    The excited level comes from a Lanczos run deflated against the ground
    state, so an exactly degenerate partner shows up with the same energy.
    ``starts`` optionally supplies start vectors for the two runs. For a
    one-dimensional space ``excited`` is None.
    """
    if H.dim == 1:
        e = float(H.diagonal()[0])
        return GroundState(e, np.ones(1), 0.0, 0), None
    if method == "dense" or (method == "auto" and H.dim <= dense_threshold):
        spec = dense_spectrum(H, threshold=max(dense_threshold, H.dim))
        return spec.ground, GroundState(float(spec.energies[1]), spec.vectors[:, 1], 0.0, 0)
    if method not in ("auto", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    gs = lanczos_ground(H, tol=tol, max_iter=max_iter, seed=seed, start=starts[0])
    # the Ritz value is an upper bound, so a loose residual still separates E1 from E0
    ex = lanczos_ground(H, tol=max(tol, 1e-6), max_iter=max_iter, seed=seed + 1,
                        start=starts[1], deflate=[gs.vector])
    return gs, ex
