"""Cross-route and oracle checks, run by ``fidsus validate``.

Each check reports a measured deviation against a fixed tolerance. The
``fault`` hook deliberately corrupts one input so the harness can prove
that it notices failures.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import thermal
from .eigensolver import dense_spectrum
from .errors import DegenerateGroundStateError
from .fidelity import (SolverParams, chi_f_dynamic, chi_f_finite_difference, chi_f_krylov,
                       chi_f_spectral, ground_state, krylov_decomposition, krylov_quadrature_chi,
                       spectral_correlator)
from .freefermion import chi_f_u0
from .hamiltonian import ModelSpec, build_hubbard, hamiltonian_at

FAULTS = ("sign_flip",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.deviation) and self.deviation <= self.tolerance)


def _rel(a, b):
    return abs(a - b) / abs(b)


def _hubbard(L, boundary):
    return build_hubbard(ModelSpec.half_filled(L, boundary=boundary))


def four_routes(L, boundary, U, fault=None):
    """chi_F at U by the four routes, keyed by route name."""
    H0, HI = _hubbard(L, boundary)
    H = hamiltonian_at(H0, HI, U)
    spec = dense_spectrum(H)
    gs = spec.ground
    out = {
        "finite_difference": chi_f_finite_difference(H0, HI, U, 1e-3).chi_f,
        "spectral": chi_f_spectral(spec, HI).chi_f,
        "dynamic_omega0": chi_f_dynamic(spec, HI, 0.0).chi_f,
        "krylov_integral": chi_f_krylov(gs.vector, gs.energy, H, HI, depth=H.dim).chi_f,
    }
    if fault == "sign_flip":
        out["krylov_integral"] = -out["krylov_integral"]
    return out


def check_two_site(fault=None):
    dev = 0.0
    for U in (0.0, 2.0, 4.0):
        exact = 4.0 / (U ** 2 + 16.0) ** 2
        for v in four_routes(2, "open", U, fault).values():
            dev = max(dev, _rel(v, exact))
    return CheckResult("two_site_closed_form", dev, 1e-6)


def check_four_route_L4(fault=None):
    spread = krylov = 0.0
    for U in (0.0, 1.0, 4.0):
        r = four_routes(4, "antiperiodic", U, fault)
        vals = np.array(list(r.values()))
        spread = max(spread, float(np.ptp(vals) / abs(r["spectral"])))
        krylov = max(krylov, _rel(r["krylov_integral"], r["spectral"]))
    return [CheckResult("four_route_L4", spread, 1e-5),
            CheckResult("krylov_exact_subspace_L4", krylov, 1e-8)]


def check_correlator_L4():
    H0, HI = _hubbard(4, "antiperiodic")
    H = hamiltonian_at(H0, HI, 1.0)
    spec = dense_spectrum(H)
    gs = spec.ground
    rd = krylov_decomposition(gs.vector, gs.energy, H, HI, depth=H.dim)
    taus = np.array([0.1, 1.0, 10.0])
    dev = float(np.max(np.abs(rd.correlator(taus) - spectral_correlator(spec, HI, taus))))
    quad, _ = krylov_quadrature_chi(rd)
    return [CheckResult("correlator_vs_dense_L4", dev, 1e-8),
            CheckResult("krylov_tau_quadrature_L4", _rel(quad, rd.chi_f()), 1e-7)]


def check_free_fermion():
    H0, HI = _hubbard(6, "periodic")
    spec = dense_spectrum(hamiltonian_at(H0, HI, 0.0))
    ed6 = chi_f_spectral(spec, HI).chi_f
    H0, HI = _hubbard(10, "periodic")
    H = hamiltonian_at(H0, HI, 0.0)
    gs = ground_state(H0, HI, 0.0, SolverParams())
    kr10 = chi_f_krylov(gs.vector, gs.energy, H, HI).chi_f
    return [CheckResult("free_fermion_vs_ed_L6", _rel(chi_f_u0(6), ed6), 1e-10),
            CheckResult("free_fermion_vs_krylov_L10", _rel(chi_f_u0(10), kr10), 1e-6)]


def check_degeneracy_guard():
    failures = 0
    H0, HI = _hubbard(8, "periodic")
    try:
        chi_f_finite_difference(H0, HI, 0.0, 1e-3)
        failures += 1
    except DegenerateGroundStateError:
        pass
    H0, HI = _hubbard(8, "antiperiodic")
    try:
        chi_f_finite_difference(H0, HI, 0.0, 1e-3)
    except DegenerateGroundStateError:
        failures += 1
    return CheckResult("degeneracy_guard_L8", float(failures), 0.0)


def check_delta_collapse_L6():
    H0, HI = _hubbard(6, "periodic")
    dev = 0.0
    for U in (0.0, 2.0, 4.0):
        vals = [chi_f_finite_difference(H0, HI, U, d).chi_f for d in (0.04, 0.05, 0.06)]
        dev = max(dev, (max(vals) - min(vals)) / max(vals))
    return CheckResult("delta_collapse_L6", dev, 1e-3)


def check_thermal():
    dos = thermal.enumerate_dos(4, 4)
    t_dev = max(thermal.chi_f_temperature(dos, b).rel_deviation for b in (0.2, 0.4, 0.8))
    f_dev = max(thermal.chi_f_field(dos, 0.3, h).rel_deviation for h in (0.0, 0.1))
    return [CheckResult("thermal_temperature_identity_4x4", t_dev, 1e-4),
            CheckResult("thermal_field_identity_4x4", f_dev, 1e-4)]


def check_wang_landau():
    w2 = thermal.wang_landau(2, 2, seed=0)
    dev2 = float(np.max(np.abs(w2.ln_g - np.log([2.0, 12.0, 2.0]))))
    w4 = thermal.wang_landau(4, 4, seed=0)
    exact = thermal.enumerate_dos(4, 4)
    dev4 = max(_rel(thermal.specific_heat(w4, b), thermal.specific_heat(exact, b))
               for b in np.linspace(0.1, 1.0, 10))
    return [CheckResult("wang_landau_2x2_ln_g", dev2, 0.02),
            CheckResult("wang_landau_4x4_cv", dev4, 0.02)]


def check_plateau():
    a = chi_f_u0(952) / 952
    b = chi_f_u0(1906) / 1906
    return CheckResult("free_fermion_plateau_952_1906", _rel(a, b), 0.01)


def validate(fault: str | None = None, quick: bool = False) -> list[CheckResult]:
    """Run every check; ``quick`` skips the Wang-Landau and L = 1906 checks."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; expected one of {FAULTS}")
    results = [check_two_site(fault)]
    results += check_four_route_L4(fault)
    results += check_correlator_L4()
    results += check_free_fermion()
    results.append(check_degeneracy_guard())
    results.append(check_delta_collapse_L6())
    results += check_thermal()
    if not quick:
        results += check_wang_landau()
        results.append(check_plateau())
    return results


def format_report(results, as_json=False) -> str:
    if as_json:
        return json.dumps([dict(asdict(r), passed=r.passed) for r in results], indent=2)
    lines = ["check,deviation,tolerance,status"]
    for r in results:
        lines.append(f"{r.name},{r.deviation:.3e},{r.tolerance:.1e},{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
