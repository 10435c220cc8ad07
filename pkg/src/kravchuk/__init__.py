"""Kravchuk-function discretization of the 1D quantum harmonic oscillator."""

__version__ = "0.1.0"

from .grid import Grid, GridFunction, GridMismatchError, inner, norm_h1, norm_l2, norm_linf, project, tau, tau_inv
from .basis import KravchukBasis, basis_for, make_basis, make_weight, phi_h, kravchuk_poly
from .operators import DiscreteHamiltonian, make_hamiltonian, make_ladder, apply_Hh, apply_lowering, apply_raising
from .transform import KravchukTransform, SpectralState, analyze, synthesize, build_L_direct, build_L_factored
from .evolution import propagate, energy, mass, evolve_and_compare
from .hermite import psi, psi_all, TestFunction

__all__ = [
    "Grid", "GridFunction", "GridMismatchError", "inner", "norm_h1", "norm_l2", "norm_linf", "project",
    "tau", "tau_inv", "KravchukBasis", "basis_for", "make_basis", "make_weight", "phi_h", "kravchuk_poly",
    "DiscreteHamiltonian", "make_hamiltonian", "make_ladder", "apply_Hh", "apply_lowering", "apply_raising",
    "KravchukTransform", "SpectralState", "analyze", "synthesize", "build_L_direct", "build_L_factored",
    "propagate", "energy", "mass", "evolve_and_compare", "psi", "psi_all", "TestFunction",
]
