import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidsus.eigensolver import dense_spectrum
from fidsus.errors import DegenerateGroundStateError, NumericalBreakdownError
from fidsus.fidelity import (SolverParams, SusceptibilityResult, chi_f_dynamic,
                             chi_f_finite_difference, chi_f_krylov, chi_f_spectral,
                             connected_correlator, krylov_decomposition, krylov_quadrature_chi,
                             neg2_log_fidelity, overlap_fidelity, spectral_correlator,
                             susceptibility)
from fidsus.hamiltonian import ModelSpec, SparseOperator, build_hubbard, hamiltonian_at


def _two_site(U):
    return 4.0 / (U ** 2 + 16.0) ** 2


def _ops(L, boundary="auto"):
    return build_hubbard(ModelSpec.half_filled(L, boundary=boundary))


def _unit(v):
    return v / np.linalg.norm(v)


def test_overlap_fidelity_basic():
    a = np.array([1.0, 0.0])
    assert overlap_fidelity(a, a) == 1.0
    assert overlap_fidelity(a, -a) == 1.0
    assert overlap_fidelity(a, np.array([0.0, 1.0])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        overlap_fidelity(a, np.array([2.0, 0.0]))
    with pytest.raises(ValueError):
        overlap_fidelity(a, np.array([1.0, 0.0, 0.0]))


def test_neg2_log_fidelity_small_angle():
    # for a rotation by eps, -2 ln cos(eps) ~ eps^2 with no cancellation
    eps = 1e-7
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([np.cos(eps), np.sin(eps), 0.0])
    assert neg2_log_fidelity(a, b) == pytest.approx(eps ** 2, rel=1e-9)


@given(st.integers(2, 30), st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_fidelity_bounds_and_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    a, b = _unit(rng.standard_normal(n)), _unit(rng.standard_normal(n))
    F = overlap_fidelity(a, b)
    assert 0.0 <= F <= 1.0
    assert F == pytest.approx(overlap_fidelity(b, a), abs=1e-15)
    assert neg2_log_fidelity(a, a) == 0.0


@pytest.mark.parametrize("U", [0.0, 2.0, 4.0])
def test_two_site_closed_form_all_routes(U):
    H0, HI = _ops(2, "open")
    H = hamiltonian_at(H0, HI, U)
    spec = dense_spectrum(H)
    gs = spec.ground
    exact = _two_site(U)
    assert chi_f_finite_difference(H0, HI, U, 1e-3).chi_f == pytest.approx(exact, rel=1e-6)
    assert chi_f_spectral(spec, HI).chi_f == pytest.approx(exact, rel=1e-12)
    assert chi_f_dynamic(spec, HI, 0.0).chi_f == pytest.approx(exact, rel=1e-12)
    assert chi_f_krylov(gs.vector, gs.energy, H, HI, depth=3).chi_f == pytest.approx(exact, rel=1e-12)


def test_two_site_u0_value():
    H0, HI = _ops(2, "open")
    assert chi_f_spectral(dense_spectrum(H0), HI).chi_f == pytest.approx(1 / 64, rel=1e-14)


def test_finite_difference_symmetric_in_step_sign():
    H0, HI = _ops(4)
    a = chi_f_finite_difference(H0, HI, 1.0, 0.01)
    b = chi_f_finite_difference(H0, HI, 1.0, -0.01)
    assert a.chi_f == b.chi_f
    with pytest.raises(ValueError):
        chi_f_finite_difference(H0, HI, 1.0, 0.0)


def test_finite_difference_richardson_improves():
    H0, HI = _ops(4)
    ref = chi_f_spectral(dense_spectrum(hamiltonian_at(H0, HI, 2.0)), HI).chi_f
    raw = chi_f_finite_difference(H0, HI, 2.0, 0.2, richardson=False).chi_f
    rich = chi_f_finite_difference(H0, HI, 2.0, 0.2).chi_f
    assert abs(rich - ref) < abs(raw - ref)


def test_dynamic_decreases_with_omega():
    H0, HI = _ops(4)
    spec = dense_spectrum(hamiltonian_at(H0, HI, 1.0))
    vals = [chi_f_dynamic(spec, HI, w).chi_f for w in (0.0, 0.5, 1.0, 5.0)]
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(ValueError):
        chi_f_dynamic(spec, HI, -1.0)


def test_correlator_matches_dense_and_quadrature():
    H0, HI = _ops(4)
    H = hamiltonian_at(H0, HI, 1.0)
    spec = dense_spectrum(H)
    gs = spec.ground
    taus = np.array([0.0, 0.1, 1.0, 10.0])
    kr = connected_correlator(gs.vector, gs.energy, H, HI, taus, depth=H.dim)
    assert np.max(np.abs(kr - spectral_correlator(spec, HI, taus))) < 1e-10
    # C(0) is the variance of HI
    hv = HI.matvec(gs.vector)
    assert kr[0] == pytest.approx(hv @ hv - (gs.vector @ hv) ** 2, rel=1e-12)
    rd = krylov_decomposition(gs.vector, gs.energy, H, HI, depth=H.dim)
    quad, _ = krylov_quadrature_chi(rd)
    assert quad == pytest.approx(rd.chi_f(), rel=1e-8)


def test_correlator_is_monotone_decreasing():
    H0, HI = _ops(6)
    H = hamiltonian_at(H0, HI, 2.0)
    gs = dense_spectrum(H).ground
    c = connected_correlator(gs.vector, gs.energy, H, HI, np.linspace(0, 5, 30))
    assert np.all(np.diff(c) < 0) and np.all(c > 0)
    with pytest.raises(ValueError):
        connected_correlator(gs.vector, gs.energy, H, HI, -1.0)


def test_krylov_rejects_non_ground_vector():
    # the top eigenvector handed over as if it were the ground state
    H = SparseOperator(np.diag([0.0, 1.0, 2.0]))
    HI = SparseOperator(np.ones((3, 3)))
    with pytest.raises(NumericalBreakdownError):
        krylov_decomposition(np.array([0.0, 0.0, 1.0]), 2.0, H, HI, depth=3)


def test_krylov_with_hi_proportional_to_identity():
    H = SparseOperator(np.diag([0.0, 1.0, 2.0]))
    res = chi_f_krylov(np.array([1.0, 0.0, 0.0]), 0.0, H, SparseOperator(np.eye(3)))
    assert res.chi_f == 0.0


@given(st.integers(3, 25), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_routes_agree_on_random_symmetric_matrices(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, n))
    H0, HI = SparseOperator((a + a.T) / 2), SparseOperator((b + b.T) / 2)
    spec = dense_spectrum(H0)
    if spec.energies[1] - spec.energies[0] < 0.05:
        return
    ref = chi_f_spectral(spec, HI).chi_f
    assert ref >= 0
    gs = spec.ground
    kr = chi_f_krylov(gs.vector, gs.energy, H0, HI, depth=n).chi_f
    assert kr == pytest.approx(ref, rel=1e-7)
    fd = chi_f_finite_difference(H0, HI, 0.0, 1e-3, SolverParams(method="dense")).chi_f
    assert fd == pytest.approx(ref, rel=1e-4)


def test_degenerate_ground_state_raises():
    H0, HI = _ops(8, "periodic")
    with pytest.raises(DegenerateGroundStateError) as exc:
        chi_f_finite_difference(H0, HI, 0.0, 1e-3)
    assert exc.value.gap is not None
    H = SparseOperator(np.diag([0.0, 0.0, 1.0]))
    with pytest.raises(DegenerateGroundStateError):
        chi_f_spectral(dense_spectrum(H), SparseOperator(np.ones((3, 3))))


def test_susceptibility_dispatch():
    H0, HI = _ops(4)
    vals = {r: susceptibility(H0, HI, 1.0, r, dlam=1e-3).chi_f
            for r in ("finite_difference", "spectral", "dynamic_omega0", "krylov_integral")}
    ref = vals["spectral"]
    for v in vals.values():
        assert v == pytest.approx(ref, rel=1e-5)
    with pytest.raises(ValueError):
        susceptibility(H0, HI, 1.0, "guess")
    with pytest.raises(ValueError):
        SusceptibilityResult(0.0, 1.0, "guess")


def test_finite_difference_lanczos_path():
    # dim 400 > dense threshold, so this goes through Lanczos with warm starts
    H0, HI = _ops(6)
    spec = dense_spectrum(hamiltonian_at(H0, HI, 2.0))
    ref = chi_f_spectral(spec, HI).chi_f
    res = chi_f_finite_difference(H0, HI, 2.0, 0.05, SolverParams(dense_threshold=10))
    assert res.chi_f == pytest.approx(ref, rel=1e-6)
    assert 0 < res.fidelity < 1


@pytest.mark.slow
def test_krylov_matches_finite_difference_at_lanczos_scale():
    H0, HI = _ops(10, "periodic")
    assert H0.dim == 63504
    kr = susceptibility(H0, HI, 1.0, "krylov_integral").chi_f
    fd = chi_f_finite_difference(H0, HI, 1.0, 0.05).chi_f
    assert kr == pytest.approx(fd, rel=1e-4)
