"""Quantum kernel: bases, operators, eigensolving, states, propagation."""

from .basis import BasisError, BasisSpec, embed, product_state, tensor
from .evolve import check_edge_weight, edge_weight, evolve
from .linalg import (
    NonHermitianError,
    PropagationError,
    hermitian_eig,
    hermiticity_defect,
    is_hermitian,
    is_unitary,
    lanczos_expm_multiply,
)
from .operators import (
    ParameterError,
    fock_operators,
    ladder,
    momentum_sq,
    pauli_operators,
    position_sq,
    rotor_operators,
    spin1_operators,
    trig_of_position,
)
from .states import (
    DensityMatrix,
    StateError,
    StateVector,
    TruncationError,
    coherent_state,
    expectation,
    ground_state,
    rotor_gaussian_packet,
    thermal_density,
)

__all__ = [
    "BasisError",
    "BasisSpec",
    "DensityMatrix",
    "NonHermitianError",
    "ParameterError",
    "PropagationError",
    "StateError",
    "StateVector",
    "TruncationError",
    "check_edge_weight",
    "coherent_state",
    "edge_weight",
    "embed",
    "evolve",
    "expectation",
    "fock_operators",
    "ground_state",
    "hermitian_eig",
    "hermiticity_defect",
    "is_hermitian",
    "is_unitary",
    "ladder",
    "lanczos_expm_multiply",
    "momentum_sq",
    "pauli_operators",
    "position_sq",
    "product_state",
    "rotor_gaussian_packet",
    "rotor_operators",
    "spin1_operators",
    "tensor",
    "thermal_density",
    "trig_of_position",
]
