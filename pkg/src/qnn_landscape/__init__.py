"""Statevector simulator and statistical toolkit for quantum-state-learning
loss landscapes: exact gradients/Hessians/QFI of fidelity and energy losses,
fixed-overlap target ensembles, subspace Haar moments, and the closed-form
local-minimum probability bounds, with Monte Carlo verification drivers.
"""

from .circuits import (
    FixedGate,
    GeneratorSpec,
    ParamGate,
    ParameterizedCircuit,
    build_alt,
    derivative_state,
    evaluate,
    evaluate_many,
    rotation,
    second_derivative_state,
    state_and_jacobian,
)
from .derivatives import (
    FidelityLoss,
    LocalLoss,
    Precision,
    gradient_exact,
    gradient_shift,
    hessian,
    is_local_min,
    jacobi_eigenvalues,
    loss,
    min_eigenvalue,
    qfi,
)
from .ensembles import (
    EnsembleSpec,
    RngStream,
    complement_state,
    haar_state,
    haar_unitary,
    sample_block_unitary,
    sample_target,
)
from .statevector import (
    DenseUnitary,
    PauliString,
    StateVector,
    apply_controlled_pauli,
    apply_one_qubit,
    fidelity,
    inner_product,
    pauli_apply,
)

__version__ = "0.1.0"
