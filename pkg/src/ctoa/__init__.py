"""Confined quantum time-of-arrival operators.

Time kernels, CTOA integral kernels, their Nystrom spectra, confined
Crank-Nicolson dynamics and verification of the canonical commutation
relation and the classical limit.
"""
from .model import PhysicalParams, PotentialSpec, classical_toa, ltoa_eval, ltoa_terms, make_potential
from .timekernel import TimeKernelField, closed_form_timekernel, goursat_solve, kernel_eval, solve_timekernel
from .operators import CtoaKernel
from .spectral import Nodality, Spectrum, eigensolve, gauss_legendre, nystrom_interpolate, nystrom_matrix
from .dynamics import crank_nicolson_evolve, detect_arrival, hamiltonian_matrix
from .verify import TestFunction, weak_ccr_defect, wigner_transform
from .estimator import CtoaSpectrum

__version__ = "0.1.0"

__all__ = [
    "PhysicalParams",
    "PotentialSpec",
    "classical_toa",
    "ltoa_terms",
    "ltoa_eval",
    "make_potential",
    "TimeKernelField",
    "closed_form_timekernel",
    "goursat_solve",
    "solve_timekernel",
    "kernel_eval",
    "CtoaKernel",
    "Nodality",
    "Spectrum",
    "gauss_legendre",
    "nystrom_matrix",
    "eigensolve",
    "nystrom_interpolate",
    "hamiltonian_matrix",
    "crank_nicolson_evolve",
    "detect_arrival",
    "TestFunction",
    "weak_ccr_defect",
    "wigner_transform",
    "CtoaSpectrum",
]
