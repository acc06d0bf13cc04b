import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidsus.eigensolver import (Degeneracy, dense_spectrum, fix_sign, gap_check, lanczos_ground,
                                lowest_two)
from fidsus.errors import ConvergenceError
from fidsus.hamiltonian import ModelSpec, SparseOperator, build_hubbard, hamiltonian_at


def _random_symmetric(n, seed):
    a = np.random.default_rng(seed).standard_normal((n, n))
    return SparseOperator((a + a.T) / 2)


@pytest.mark.parametrize("L,U", [(4, 1.0), (6, 0.0), (6, 3.0)])
def test_lanczos_matches_dense(L, U):
    H0, HI = build_hubbard(ModelSpec.half_filled(L))
    H = hamiltonian_at(H0, HI, U)
    spec = dense_spectrum(H)
    gs = lanczos_ground(H, tol=1e-11)
    assert gs.energy == pytest.approx(spec.energies[0], abs=1e-10)
    assert abs(abs(gs.vector @ spec.vectors[:, 0]) - 1) < 1e-10
    assert gs.residual <= 1e-11


@given(st.integers(2, 60), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_lanczos_on_random_matrices(n, seed):
    H = _random_symmetric(n, seed)
    E = np.linalg.eigvalsh(H.to_dense())
    if E[1] - E[0] < 1e-3:
        return
    gs = lanczos_ground(H, tol=1e-9, seed=seed)
    assert gs.energy == pytest.approx(E[0], abs=1e-8)


def test_lanczos_is_deterministic():
    H0, HI = build_hubbard(ModelSpec.half_filled(8))
    H = hamiltonian_at(H0, HI, 2.0)
    a, b = lanczos_ground(H, seed=3), lanczos_ground(H, seed=3)
    assert a.energy == b.energy
    assert np.array_equal(a.vector, b.vector)


def test_ritz_values_decrease_monotonically():
    H0, HI = build_hubbard(ModelSpec.half_filled(8))
    gs = lanczos_ground(hamiltonian_at(H0, HI, 1.0))
    hist = np.array(gs.ritz_history)
    assert np.all(np.diff(hist) <= 1e-12)


def test_sign_convention():
    v = np.array([0.1, -0.9, 0.2])
    assert fix_sign(v)[1] > 0
    H0, HI = build_hubbard(ModelSpec.half_filled(6))
    gs = lanczos_ground(hamiltonian_at(H0, HI, 2.0))
    assert gs.vector[np.argmax(np.abs(gs.vector))] > 0


def test_convergence_error_carries_residual():
    H0, HI = build_hubbard(ModelSpec.half_filled(8))
    with pytest.raises(ConvergenceError) as exc:
        lanczos_ground(hamiltonian_at(H0, HI, 1.0), tol=1e-14, max_iter=5)
    assert exc.value.iterations == 5
    assert exc.value.residual > 1e-14


def test_deflation_finds_second_level():
    H = _random_symmetric(40, 1)
    E = np.linalg.eigvalsh(H.to_dense())
    gs = lanczos_ground(H, tol=1e-10)
    ex = lanczos_ground(H, tol=1e-8, seed=1, deflate=[gs.vector])
    assert ex.energy == pytest.approx(E[1], abs=1e-8)


def test_lowest_two_routes_agree():
    H0, HI = build_hubbard(ModelSpec.half_filled(6))
    H = hamiltonian_at(H0, HI, 1.5)
    gd, ed = lowest_two(H, method="dense")
    gl, el = lowest_two(H, method="lanczos", tol=1e-11)
    assert gd.energy == pytest.approx(gl.energy, abs=1e-10)
    assert ed.energy == pytest.approx(el.energy, abs=1e-6)


def test_lowest_two_one_dimensional():
    gs, ex = lowest_two(SparseOperator(np.array([[2.5]])))
    assert gs.energy == 2.5 and ex is None


def test_gap_check():
    assert gap_check(-5.0, -5.0) is Degeneracy.DEGENERATE
    assert gap_check(-5.0, -5.0 + 1e-9) is Degeneracy.DEGENERATE
    assert gap_check(-5.0, -4.9) is Degeneracy.NONDEGENERATE
    assert gap_check(0.0, 0.1, gap_tol=0.5) == "degenerate"


def test_l8_periodic_degenerate_at_u0_only():
    H0, HI = build_hubbard(ModelSpec.half_filled(8, boundary="periodic"))
    gs, ex = lowest_two(hamiltonian_at(H0, HI, 0.0), tol=1e-10)
    assert gap_check(gs.energy, ex.energy) is Degeneracy.DEGENERATE
    H0, HI = build_hubbard(ModelSpec.half_filled(8, boundary="antiperiodic"))
    gs, ex = lowest_two(hamiltonian_at(H0, HI, 0.0), tol=1e-10)
    assert gap_check(gs.energy, ex.energy) is Degeneracy.NONDEGENERATE


def test_dense_threshold():
    H0, _ = build_hubbard(ModelSpec.half_filled(8))
    with pytest.raises(ValueError):
        dense_spectrum(H0, threshold=100)
