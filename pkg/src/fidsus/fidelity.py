"""Ground-state fidelity and fidelity susceptibility.

Four independent routes to chi_F for H(lam) = H0 + lam * HI:

* ``finite_difference``: -2 ln F / dlam^2 from the overlap of ground states
  at lam -/+ dlam/2, Richardson-refined.
* ``spectral``: sum over excited states |<n|HI|0>|^2 / (E_n - E_0)^2.
* ``dynamic_omega0``: the frequency-resolved sum evaluated at omega = 0.
* ``krylov_integral``: integral of tau * C(tau) over imaginary time, where
  C is the connected HI-HI correlator, done in closed form from the Ritz
  decomposition of a Krylov space grown from the deflated HI|psi0>.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal

from .eigensolver import (Spectrum, default_gap_tol, dense_spectrum, lowest_two,
                          require_nondegenerate)
from .errors import DegenerateGroundStateError, NumericalBreakdownError
from .hamiltonian import SparseOperator, hamiltonian_at

ROUTES = ("finite_difference", "spectral", "dynamic_omega0", "krylov_integral")
NORM_TOL = 1e-8


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-11
    max_iter: int = 4000
    seed: int = 0
    method: str = "auto"          # "auto" | "dense" | "lanczos"
    dense_threshold: int = 1000
    gap_tol: float | None = None  # None -> 1e-8 * max(1, |E0|)
    krylov_depth: int = 100


@dataclass(frozen=True)
class SusceptibilityResult:
    lam: float
    chi_f: float
    route: str
    params: dict = field(default_factory=dict)
    error_estimate: float = 0.0
    fidelity: float | None = None

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"unknown route {self.route!r}")


def _check_unit(v, name):
    v = np.asarray(v, dtype=np.float64)
    if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
        raise ValueError(f"{name} is not normalized (norm {np.linalg.norm(v):.12g})")
    return v


def _overlap_angle(a, b) -> float:
    """Angle between the rays of two unit vectors, accurate for tiny angles."""
    s = 1.0 if a @ b >= 0 else -1.0
    return 2.0 * np.arctan2(np.linalg.norm(a - s * b), np.linalg.norm(a + s * b))


def overlap_fidelity(psi_a, psi_b) -> float:
    """F = |<psi_a|psi_b>| for unit vectors."""
    a = _check_unit(psi_a, "psi_a")
    b = _check_unit(psi_b, "psi_b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(min(1.0, np.cos(_overlap_angle(a, b))))


def neg2_log_fidelity(psi_a, psi_b) -> float:
    """-2 ln |<psi_a|psi_b>|, computed from the angle to avoid cancellation near F = 1."""
    a = _check_unit(psi_a, "psi_a")
    b = _check_unit(psi_b, "psi_b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(-np.log1p(-np.sin(_overlap_angle(a, b)) ** 2))


def ground_pair(H0, HI, lam, params: SolverParams = SolverParams(), starts=(None, None)):
    """Ground state and first excited level of H0 + lam * HI; raises on degeneracy."""
    H = hamiltonian_at(H0, HI, lam)
    gs, ex = lowest_two(H, tol=params.tol, max_iter=params.max_iter, seed=params.seed,
                        method=params.method, dense_threshold=params.dense_threshold,
                        starts=starts)
    if ex is not None:
        require_nondegenerate(gs.energy, ex.energy, params.gap_tol, where=f"at lambda={lam:g}")
    return gs, ex


def ground_state(H0, HI, lam, params: SolverParams = SolverParams()):
    """Nondegenerate ground state of H0 + lam * HI, or DegenerateGroundStateError."""
    return ground_pair(H0, HI, lam, params)[0]


def _starts(pair):
    gs, ex = pair
    return gs.vector, None if ex is None else ex.vector


def _chi_from_pairs(a, b, dlam):
    n2lf = neg2_log_fidelity(a[0].vector, b[0].vector)
    return n2lf / dlam ** 2, float(np.exp(-0.5 * n2lf))


def chi_f_finite_difference(H0: SparseOperator, HI: SparseOperator, lam: float,
                            dlam: float = 1e-3, params: SolverParams = SolverParams(),
                            richardson: bool = True) -> SusceptibilityResult:
    """chi_F = -2 ln F / dlam^2 between ground states at lam -/+ dlam/2.

    With ``richardson`` the estimate at dlam/2 is combined with the one at
    dlam as (4 chi_half - chi_full) / 3; the spread between the two is the
    error estimate. ``fidelity`` holds F at the full step.
    """
    if dlam == 0 or not np.isfinite(dlam):
        raise ValueError(f"dlam must be nonzero and finite, got {dlam}")
    dlam = abs(dlam)
    # neighbouring solves start from each other's vectors; the converged result does not depend on it
    a = ground_pair(H0, HI, lam - dlam / 2, params)
    b = ground_pair(H0, HI, lam + dlam / 2, params, _starts(a))
    chi_full, F = _chi_from_pairs(a, b, dlam)
    if not richardson:
        return SusceptibilityResult(lam, chi_full, "finite_difference",
                                    {"dlam": dlam, "richardson": False}, 0.0, F)
    c = ground_pair(H0, HI, lam - dlam / 4, params, _starts(a))
    d = ground_pair(H0, HI, lam + dlam / 4, params, _starts(b))
    chi_half, _ = _chi_from_pairs(c, d, dlam / 2)
    chi = max(0.0, (4.0 * chi_half - chi_full) / 3.0)
    return SusceptibilityResult(lam, chi, "finite_difference",
                                {"dlam": dlam, "richardson": True},
                                abs(chi_half - chi_full), F)


def _spectral_weights(spec: Spectrum, HI: SparseOperator, gap_tol):
    E = spec.energies
    if len(E) < 2:
        return np.empty(0), np.empty(0)
    require_nondegenerate(E[0], E[1], gap_tol)
    psi0 = spec.vectors[:, 0]
    h_n0 = spec.vectors[:, 1:].T @ HI.matvec(psi0)
    return h_n0 ** 2, E[1:] - E[0]


def chi_f_spectral(spec: Spectrum, HI: SparseOperator, gap_tol=None, lam=float("nan")):
    """Sum over n != 0 of |<n|HI|0>|^2 / (E_n - E_0)^2 from a full spectrum."""
    w, d = _spectral_weights(spec, HI, gap_tol)
    chi = float(np.sum(w / d ** 2)) if len(w) else 0.0
    return SusceptibilityResult(lam, chi, "spectral", {"dim": len(spec)})


def chi_f_dynamic(spec: Spectrum, HI: SparseOperator, omega: float = 0.0, gap_tol=None,
                  lam=float("nan")):
    """Frequency-resolved sum |<n|HI|0>|^2 / ((E_n - E_0)^2 + omega^2)."""
    if omega < 0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    w, d = _spectral_weights(spec, HI, gap_tol)
    chi = float(np.sum(w / (d ** 2 + omega ** 2))) if len(w) else 0.0
    return SusceptibilityResult(lam, chi, "dynamic_omega0", {"omega": float(omega)})


def spectral_correlator(spec: Spectrum, HI: SparseOperator, tau, gap_tol=None):
    """Connected correlator from the full spectrum: sum |H_n0|^2 exp(-(E_n - E_0) tau)."""
    w, d = _spectral_weights(spec, HI, gap_tol)
    tau = np.asarray(tau, dtype=np.float64)
    return np.exp(-np.multiply.outer(tau, d)) @ w


@dataclass(frozen=True)
class RitzDecomposition:
    """Excitation energies and weights of HI|psi0> in the Krylov space of H."""

    E0: float
    theta: np.ndarray
    weights: np.ndarray
    alphas: np.ndarray = field(repr=False)
    betas: np.ndarray = field(repr=False)
    norm2: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.alphas)

    @property
    def gaps(self) -> np.ndarray:
        return self.theta - self.E0

    def truncated(self, m: int) -> "RitzDecomposition":
        """Decomposition using only the first ``m`` Lanczos steps."""
        m = max(1, min(m, self.depth))
        theta, weights = _ritz(self.alphas[:m], self.betas[:m - 1], self.norm2)
        return RitzDecomposition(self.E0, theta, weights, self.alphas[:m], self.betas[:m - 1], self.norm2)

    def correlator(self, tau):
        tau = np.asarray(tau, dtype=np.float64)
        return np.exp(-np.multiply.outer(tau, self.gaps)) @ self.weights

    def chi_f(self, omega: float = 0.0) -> float:
        return float(np.sum(self.weights / (self.gaps ** 2 + omega ** 2)))


def _ritz(alphas, betas, norm2):
    if len(alphas) == 1:
        return np.array(alphas, dtype=np.float64), np.array([norm2])
    theta, s = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
    return theta, norm2 * s[0] ** 2


def krylov_decomposition(psi0, E0: float, H: SparseOperator, HI: SparseOperator,
                         depth: int = 100, gap_tol=None) -> RitzDecomposition:
    """Lanczos on H started from HI|psi0> with the psi0 component removed.

    Every Krylov vector is reorthogonalized against psi0 and all earlier
    vectors, so the n = 0 term (the disconnected <HI>^2 part) never enters.
    """
    if depth < 1:
        raise ValueError(f"Krylov depth must be >= 1, got {depth}")
    psi0 = _check_unit(psi0, "psi0")
    if gap_tol is None:
        gap_tol = default_gap_tol(E0)
    phi = HI.matvec(psi0)
    for _ in range(2):
        phi -= (psi0 @ phi) * psi0
    norm2 = float(phi @ phi)
    scale = float(np.linalg.norm(HI.matvec(psi0)))
    if norm2 <= (1e-13 * max(1.0, scale)) ** 2:
        # HI|psi0> is proportional to psi0: no connected fluctuation
        return RitzDecomposition(E0, np.empty(0), np.empty(0), np.empty(0), np.empty(0), 0.0)
    n = H.dim
    depth = min(depth, n - 1)
    V = np.empty((depth, n))
    V[0] = phi / np.sqrt(norm2)
    alphas, betas = [], []
    for k in range(depth):
        w = H.matvec(V[k])
        a = float(V[k] @ w)
        alphas.append(a)
        w -= a * V[k]
        if k:
            w -= betas[-1] * V[k - 1]
        for _ in range(2):
            w -= V[:k + 1].T @ (V[:k + 1] @ w)
            w -= (psi0 @ w) * psi0
        b = float(np.linalg.norm(w))
        if k + 1 == depth or b < 1e-12 * max(1.0, abs(a)):
            break
        betas.append(b)
        V[k + 1] = w / b
    alphas = np.array(alphas)
    betas = np.array(betas)
    theta, weights = _ritz(alphas, betas, norm2)
    significant = weights > 1e-14 * norm2
    if np.any(theta[significant] - E0 <= gap_tol):
        bad = float(np.min(theta[significant] - E0))
        if bad > -gap_tol:
            raise DegenerateGroundStateError(
                f"Krylov space contains a level within {bad:.3e} of E0", gap=bad)
        raise NumericalBreakdownError(
            f"Ritz value {bad:.3e} below the ground energy; psi0 is not the ground state of H")
    return RitzDecomposition(E0, theta, weights, alphas, betas, norm2)


def connected_correlator(psi0, E0, H, HI, tau, depth: int = 100):
    """<psi0|HI exp(-(H - E0) tau) HI|psi0> - <psi0|HI|psi0>^2 via Ritz pairs.

    ``tau`` may be a scalar or an array of nonnegative imaginary times.
    """
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be >= 0")
    rd = krylov_decomposition(psi0, E0, H, HI, depth)
    out = rd.correlator(tau)
    return float(out) if np.ndim(out) == 0 else out


def chi_f_krylov(psi0, E0, H, HI, depth: int = 100, lam=float("nan"),
                 gap_tol=None) -> SusceptibilityResult:
    """chi_F = sum_m w_m / (theta_m - E0)^2, i.e. the integral of tau * C(tau) in closed form.

    The error estimate is the change from dropping the last five Krylov steps.
    """
    rd = krylov_decomposition(psi0, E0, H, HI, depth, gap_tol)
    if rd.depth == 0:
        return SusceptibilityResult(lam, 0.0, "krylov_integral", {"depth": 0}, 0.0)
    chi = rd.chi_f()
    err = abs(chi - rd.truncated(rd.depth - 5).chi_f()) if rd.depth > 5 else 0.0
    return SusceptibilityResult(lam, chi, "krylov_integral",
                                {"depth": rd.depth, "requested_depth": depth}, err)


def krylov_quadrature_chi(rd: RitzDecomposition, rtol: float = 1e-10):
    """Numerical quadrature of tau * C(tau) on [0, 50 / gap]; an independent check of the closed form."""
    if len(rd.theta) == 0:
        return 0.0, 0.0
    gap = float(np.min(rd.gaps))
    tau_max = 50.0 / gap
    val, err = quad(lambda s: s * rd.correlator(s), 0.0, tau_max, epsabs=0.0, epsrel=rtol,
                    limit=500)
    return val, err


def susceptibility(H0, HI, lam: float, route: str, params: SolverParams = SolverParams(),
                   dlam: float = 1e-3, omega: float = 0.0) -> SusceptibilityResult:
    """Evaluate chi_F at ``lam`` by the named route.

    ``spectral`` and ``dynamic_omega0`` need a dense spectrum and are limited
    to ``params.dense_threshold``-sized problems (raised to 4096 if smaller).
    """
    if route == "finite_difference":
        return chi_f_finite_difference(H0, HI, lam, dlam, params)
    H = hamiltonian_at(H0, HI, lam)
    if route in ("spectral", "dynamic_omega0"):
        spec = dense_spectrum(H, threshold=max(params.dense_threshold, 4096))
        if route == "spectral":
            return chi_f_spectral(spec, HI, params.gap_tol, lam)
        return chi_f_dynamic(spec, HI, omega, params.gap_tol, lam)
    if route == "krylov_integral":
        gs = ground_state(H0, HI, lam, params)
        return chi_f_krylov(gs.vector, gs.energy, H, HI, params.krylov_depth, lam, params.gap_tol)
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")
