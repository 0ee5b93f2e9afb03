"""Finite-mode spectral simulation of stochastic semiflows and their cocycle properties."""

from .burgers import BurgersConfig, burgers_cocycle_defect, burgers_linearized, burgers_solve, cole_hopf_reference
from .integrators import StepRejected, Trajectory
from .linear import (
    MultiplierB,
    chaos_flow,
    chaos_terms,
    fundamental_solve,
    multiplication_operators,
    verify_linear_cocycle,
    wong_zakai_flow,
)
from .noise import BrownianGridPath, coarsen, q_field, sample_path, shift, smooth_approx
from .reaction_diffusion import (
    DissipativeNonlinearity,
    contraction_exponent,
    make_dissipative,
    reaction_term,
    rd_cocycle_defect,
    rd_linearized,
    rd_solve,
    transformed_constants,
)
from .semilinear import Nonlinearity, cocycle_defect, frechet_flow, make_nonlinearity, picard_solve
from .spectral import SpectralBasis, SpectralField, analyze, nemytskii_apply, semigroup_apply, synthesize

__version__ = "0.1.0"

__all__ = [
    "BurgersConfig",
    "burgers_cocycle_defect",
    "burgers_linearized",
    "burgers_solve",
    "cole_hopf_reference",
    "StepRejected",
    "Trajectory",
    "MultiplierB",
    "chaos_flow",
    "chaos_terms",
    "fundamental_solve",
    "multiplication_operators",
    "verify_linear_cocycle",
    "wong_zakai_flow",
    "BrownianGridPath",
    "coarsen",
    "q_field",
    "sample_path",
    "shift",
    "smooth_approx",
    "DissipativeNonlinearity",
    "contraction_exponent",
    "make_dissipative",
    "reaction_term",
    "rd_cocycle_defect",
    "rd_linearized",
    "rd_solve",
    "transformed_constants",
    "Nonlinearity",
    "cocycle_defect",
    "frechet_flow",
    "make_nonlinearity",
    "picard_solve",
    "SpectralBasis",
    "SpectralField",
    "analyze",
    "nemytskii_apply",
    "semigroup_apply",
    "synthesize",
]
