"""Fidelity susceptibility of quantum lattice models and classical thermal states."""

from .basis import FockBasis, build_basis
from .eigensolver import GroundState, Spectrum, dense_spectrum, gap_check, lanczos_ground
from .errors import (ConvergenceError, CoverageError, DegenerateGroundStateError, FidsusError,
                     NumericalBreakdownError, SizingError)
from .fidelity import (SolverParams, SusceptibilityResult, chi_f_dynamic, chi_f_finite_difference,
                       chi_f_krylov, chi_f_spectral, connected_correlator, overlap_fidelity,
                       susceptibility)
from .freefermion import chi_f_u0, chi_scaling_series
from .hamiltonian import ModelSpec, SparseOperator, build_hubbard, hamiltonian_at, matvec

__version__ = "0.1.0"
