"""Finite-size certification toolkit for the spin-1 SU(2)-invariant nematic model.

Exact diagonalization, reflection positivity / infrared bound checks,
continuous-time random-loop Monte Carlo and Brillouin-zone quadrature.
"""

__version__ = "0.1.0"

from .su2 import SpinSet, spin_matrices, embed_site, embed_sites, commutator
from .lattice import Lattice, Reflection, build_torus, dimer, reflections, epsilon
from .model import (
    ModelParams,
    QMatrix,
    build_H,
    q_matrix,
    tr_product,
    square_completion_check,
    staggered_unitary,
    neel_state,
    rp_decomposition,
)
from .thermal import ThermalState, CorrelationReport, diagonalize, fourier_observable, correlations

__all__ = [
    "__version__",
    "SpinSet",
    "spin_matrices",
    "embed_site",
    "embed_sites",
    "commutator",
    "Lattice",
    "Reflection",
    "build_torus",
    "dimer",
    "reflections",
    "epsilon",
    "ModelParams",
    "QMatrix",
    "build_H",
    "q_matrix",
    "tr_product",
    "square_completion_check",
    "staggered_unitary",
    "neel_state",
    "rp_decomposition",
    "ThermalState",
    "CorrelationReport",
    "diagonalize",
    "fourier_observable",
    "correlations",
]
