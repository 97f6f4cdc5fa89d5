"""Parameterized circuits: rotation/entangler sequences, the alternating-layered
ansatz, statevector evaluation and exact derivative states.

A circuit is an ordered element list applied left to right.  Parameterized
elements are exp(-i * theta * c * P) for a Pauli string P and coefficient
c > 0 (standard rotation gates have c = 1/2), so every generator has the
two-level spectrum {+-c} required by the shift rule.  Derivative states are
obtained by inserting -i*c*P immediately after the corresponding rotation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .statevector import (
    PAULI_MATRICES,
    DenseUnitary,
    PauliString,
    StateVector,
    _apply_cnot,
    _apply_cz,
    _apply_dense,
    _apply_gate2,
    _apply_gate2_cols,
    _apply_pauli,
)


@dataclass(frozen=True)
class GeneratorSpec:
    """Rotation generator c*P with operator norm c and eigenvalues exactly +-c."""

    pauli: PauliString
    coefficient: float = 0.5

    def __post_init__(self):
        if not self.coefficient > 0:
            raise ValueError(f"coefficient must be > 0, got {self.coefficient}")
        if self.pauli.weight == 0:
            raise ValueError("identity Pauli string has a one-level spectrum")

    @property
    def norm(self) -> float:
        return self.coefficient


@dataclass(frozen=True)
class ParamGate:
    """exp(-i * theta[param_index] * coefficient * pauli)."""

    generator: GeneratorSpec
    param_index: int


@dataclass(frozen=True, eq=False)
class FixedGate:
    """Non-parameterized gate: kind in {"cnot", "cz", "unitary"}."""

    kind: str
    qubits: tuple[int, ...]
    matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if self.kind in ("cnot", "cz"):
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} needs two distinct qubits, got {self.qubits}")
            if self.matrix is not None:
                raise ValueError(f"{self.kind} does not take an explicit matrix")
        elif self.kind == "unitary":
            if self.matrix is None:
                raise ValueError("unitary element needs a matrix")
            dim = 2 ** len(self.qubits)
            DenseUnitary(dim, self.matrix)  # raises if not unitary
            object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))
        else:
            raise ValueError(f"unknown fixed gate kind {self.kind!r}")


CircuitElement = ParamGate | FixedGate


class _Block(NamedTuple):
    """One rotation plus the fixed gates immediately preceding it."""

    pre: tuple[FixedGate, ...]
    gate: ParamGate


@dataclass(frozen=True, eq=False)
class ParameterizedCircuit:
    """Ordered element sequence with m_params rotation parameters."""

    n_qubits: int
    elements: tuple[CircuitElement, ...]
    m_params: int = field(init=False)
    _blocks: tuple[_Block, ...] = field(init=False, repr=False)
    _tail: tuple[FixedGate, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        blocks: list[_Block] = []
        pending: list[FixedGate] = []
        indices: list[int] = []
        for el in self.elements:
            if isinstance(el, ParamGate):
                if el.generator.pauli.n_qubits != self.n_qubits:
                    raise ValueError("generator qubit count does not match circuit")
                blocks.append(_Block(tuple(pending), el))
                indices.append(el.param_index)
                pending = []
            elif isinstance(el, FixedGate):
                if any(q >= self.n_qubits or q < 0 for q in el.qubits):
                    raise ValueError(f"fixed gate qubits {el.qubits} out of range")
                pending.append(el)
            else:
                raise TypeError(f"unexpected circuit element {el!r}")
        m = len(indices)
        if sorted(indices) != list(range(m)):
            raise ValueError("param_index values must be exactly 0..M-1, each used once")
        object.__setattr__(self, "m_params", m)
        object.__setattr__(self, "_blocks", tuple(blocks))
        object.__setattr__(self, "_tail", tuple(pending))

    def generator_norms(self) -> np.ndarray:
        """Vector of ||Omega_mu||_inf ordered by parameter index."""
        omega = np.empty(self.m_params)
        for block in self._blocks:
            omega[block.gate.param_index] = block.gate.generator.norm
        return omega

    def to_dict(self) -> dict:
        """JSON-compatible description for experiment reproducibility."""
        elements = []
        for el in self.elements:
            if isinstance(el, ParamGate):
                elements.append({
                    "type": "rotation",
                    "param_index": el.param_index,
                    "pauli": el.generator.pauli.letters,
                    "coefficient": el.generator.coefficient,
                })
            else:
                entry = {"type": el.kind, "qubits": list(el.qubits)}
                if el.matrix is not None:
                    entry["matrix_re"] = el.matrix.real.tolist()
                    entry["matrix_im"] = el.matrix.imag.tolist()
                elements.append(entry)
        return {"n_qubits": self.n_qubits, "m_params": self.m_params, "elements": elements}

    @classmethod
    def from_dict(cls, data: dict) -> ParameterizedCircuit:
        n = data["n_qubits"]
        elements: list[CircuitElement] = []
        for entry in data["elements"]:
            if entry["type"] == "rotation":
                gen = GeneratorSpec(PauliString(n, entry["pauli"]), entry["coefficient"])
                elements.append(ParamGate(gen, entry["param_index"]))
            elif entry["type"] == "unitary":
                mat = np.array(entry["matrix_re"]) + 1j * np.array(entry["matrix_im"])
                elements.append(FixedGate("unitary", tuple(entry["qubits"]), mat))
            else:
                elements.append(FixedGate(entry["type"], tuple(entry["qubits"])))
        return cls(n, tuple(elements))


def rotation(n_qubits: int, qubit: int, letter: str, param_index: int,
             coefficient: float = 0.5) -> ParamGate:
    """Single-qubit rotation element exp(-i theta c P_letter) on `qubit`."""
    gen = GeneratorSpec(PauliString.single(n_qubits, qubit, letter), coefficient)
    return ParamGate(gen, param_index)


def build_alt(n_qubits: int, depth: int) -> ParameterizedCircuit:
    """Alternating-layered ansatz.

    An initial column of R_y then R_z on every qubit, followed by `depth`
    repeated layers.  Each layer applies CZ on the pairs (0,1),(2,3),...,
    R_y and R_z columns on the qubits those pairs touch, then CZ on the
    offset pairs (1,2),(3,4),... with R_y/R_z columns on their qubits.
    A single qubit gets a bare R_y/R_z column per layer.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    elements: list[CircuitElement] = []
    counter = 0

    def rotation_columns(qubits: list[int]) -> None:
        nonlocal counter
        for letter in ("Y", "Z"):
            for q in qubits:
                elements.append(rotation(n_qubits, q, letter, counter))
                counter += 1

    rotation_columns(list(range(n_qubits)))
    main_pairs = [(q, q + 1) for q in range(0, n_qubits - 1, 2)]
    offset_pairs = [(q, q + 1) for q in range(1, n_qubits - 1, 2)]
    for _ in range(depth):
        if n_qubits == 1:
            rotation_columns([0])
            continue
        for c, t in main_pairs:
            elements.append(FixedGate("cz", (c, t)))
        rotation_columns([q for pair in main_pairs for q in pair])
        if offset_pairs:
            for c, t in offset_pairs:
                elements.append(FixedGate("cz", (c, t)))
            rotation_columns([q for pair in offset_pairs for q in pair])
    return ParameterizedCircuit(n_qubits, tuple(elements))


# ---------------------------------------------------------------------------
# Application kernels.  Tensors are shaped (2,)*n (+ optional trailing batch
# axis); rotations act either with a scalar angle or one angle per column.
# ---------------------------------------------------------------------------

def _apply_fixed(tensor: np.ndarray, gate: FixedGate, n_qubits: int) -> np.ndarray:
    if gate.kind == "cnot":
        return _apply_cnot(tensor, gate.qubits[0], gate.qubits[1], n_qubits)
    if gate.kind == "cz":
        return _apply_cz(tensor, gate.qubits[0], gate.qubits[1], n_qubits)
    return _apply_dense(tensor, gate.qubits, gate.matrix)


def _apply_fixed_adjoint(tensor: np.ndarray, gate: FixedGate, n_qubits: int) -> np.ndarray:
    if gate.kind in ("cnot", "cz"):  # involutory
        return _apply_fixed(tensor, gate, n_qubits)
    return _apply_dense(tensor, gate.qubits, gate.matrix.conj().T)


def _rotation_matrix(gen: GeneratorSpec, qubit: int, angle: float) -> np.ndarray:
    a = gen.coefficient * angle
    p2 = PAULI_MATRICES[gen.pauli.letters[qubit]]
    return np.cos(a) * np.eye(2) - 1j * np.sin(a) * p2


def _apply_rotation(tensor: np.ndarray, gen: GeneratorSpec, angle: float) -> np.ndarray:
    """exp(-i*angle*c*P) v = cos(a) v - i sin(a) P v with a = c*angle."""
    letters = gen.pauli.letters
    if gen.pauli.weight == 1:
        qubit = next(q for q, c in enumerate(letters) if c != "I")
        return _apply_gate2(tensor, qubit, _rotation_matrix(gen, qubit, angle))
    a = gen.coefficient * angle
    return np.cos(a) * tensor - 1j * np.sin(a) * _apply_pauli(tensor, letters)


def _apply_rotation_cols(tensor: np.ndarray, gen: GeneratorSpec,
                         angles: np.ndarray) -> np.ndarray:
    """Per-column rotation; `angles` has one entry per trailing-axis column."""
    letters = gen.pauli.letters
    a = gen.coefficient * angles
    cos_a, sin_a = np.cos(a), np.sin(a)
    if gen.pauli.weight == 1:
        qubit = next(q for q, c in enumerate(letters) if c != "I")
        p2 = PAULI_MATRICES[letters[qubit]]
        gates = cos_a[:, None, None] * np.eye(2) - 1j * sin_a[:, None, None] * p2
        return _apply_gate2_cols(tensor, qubit, gates)
    return cos_a * tensor - 1j * sin_a * _apply_pauli(tensor, letters)


def _insertion(tensor: np.ndarray, gen: GeneratorSpec) -> np.ndarray:
    """-i * c * P applied to the tensor (derivative of the rotation)."""
    return -1j * gen.coefficient * _apply_pauli(tensor, gen.pauli.letters)


# ---------------------------------------------------------------------------
# Evaluation and derivative states.
# ---------------------------------------------------------------------------

def _check_params(circuit: ParameterizedCircuit, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.m_params,):
        raise ValueError(
            f"expected {circuit.m_params} parameters, got shape {params.shape}"
        )
    return params


def evaluate(circuit: ParameterizedCircuit, params,
             input_state: StateVector | None = None) -> StateVector:
    """Output state of the circuit; input defaults to |0...0>."""
    params = _check_params(circuit, params)
    if input_state is None:
        input_state = StateVector.zero(circuit.n_qubits)
    elif input_state.n_qubits != circuit.n_qubits:
        raise ValueError("input state qubit count does not match circuit")
    cur = input_state.tensor()
    n = circuit.n_qubits
    for block in circuit._blocks:
        for fg in block.pre:
            cur = _apply_fixed(cur, fg, n)
        cur = _apply_rotation(cur, block.gate.generator, params[block.gate.param_index])
    for fg in circuit._tail:
        cur = _apply_fixed(cur, fg, n)
    return StateVector(n, cur.reshape(-1))


def evaluate_many(circuit: ParameterizedCircuit, params_matrix: np.ndarray) -> np.ndarray:
    """Output amplitudes for a batch of parameter vectors.

    params_matrix has shape (B, M); returns a (2^n, B) array whose columns
    are the output states on input |0...0>.
    """
    thetas = np.asarray(params_matrix, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != circuit.m_params:
        raise ValueError(f"expected shape (B, {circuit.m_params}), got {thetas.shape}")
    n, b = circuit.n_qubits, thetas.shape[0]
    cur = np.zeros((2,) * n + (b,), dtype=complex)
    cur[(0,) * n] = 1.0
    for block in circuit._blocks:
        for fg in block.pre:
            cur = _apply_fixed(cur, fg, n)
        cur = _apply_rotation_cols(cur, block.gate.generator,
                                   thetas[:, block.gate.param_index])
    for fg in circuit._tail:
        cur = _apply_fixed(cur, fg, n)
    return cur.reshape(2**n, b)


def derivative_state(circuit: ParameterizedCircuit, params, mu: int) -> np.ndarray:
    """|d_mu psi>: insert -i*Omega_mu after rotation mu.  Not normalized."""
    params = _check_params(circuit, params)
    if not 0 <= mu < circuit.m_params:
        raise ValueError(f"parameter index {mu} out of range")
    n = circuit.n_qubits
    cur = StateVector.zero(n).tensor()
    for block in circuit._blocks:
        for fg in block.pre:
            cur = _apply_fixed(cur, fg, n)
        cur = _apply_rotation(cur, block.gate.generator, params[block.gate.param_index])
        if block.gate.param_index == mu:
            cur = _insertion(cur, block.gate.generator)
    for fg in circuit._tail:
        cur = _apply_fixed(cur, fg, n)
    return cur.reshape(-1)


def second_derivative_state(circuit: ParameterizedCircuit, params, mu: int,
                            nu: int) -> np.ndarray:
    """|d_mu d_nu psi>: insert both generators at their gate positions."""
    params = _check_params(circuit, params)
    for idx in (mu, nu):
        if not 0 <= idx < circuit.m_params:
            raise ValueError(f"parameter index {idx} out of range")
    n = circuit.n_qubits
    cur = StateVector.zero(n).tensor()
    for block in circuit._blocks:
        for fg in block.pre:
            cur = _apply_fixed(cur, fg, n)
        cur = _apply_rotation(cur, block.gate.generator, params[block.gate.param_index])
        if block.gate.param_index == mu:
            cur = _insertion(cur, block.gate.generator)
        if block.gate.param_index == nu:
            cur = _insertion(cur, block.gate.generator)
    for fg in circuit._tail:
        cur = _apply_fixed(cur, fg, n)
    return cur.reshape(-1)


def state_and_jacobian(circuit: ParameterizedCircuit, params) -> tuple[np.ndarray, np.ndarray]:
    """Output amplitudes psi and the (2^n, M) matrix of all |d_mu psi>.

    One forward sweep: every block is applied to the running state and to
    all previously inserted derivative columns at once.
    """
    params = _check_params(circuit, params)
    n, m = circuit.n_qubits, circuit.m_params
    d = 2**n
    cur = StateVector.zero(n).tensor()
    cols = np.zeros((2,) * n + (m,), dtype=complex)
    order: list[int] = []  # param indices in circuit order
    for block in circuit._blocks:
        k = len(order)
        for fg in block.pre:
            cur = _apply_fixed(cur, fg, n)
            if k:
                cols[..., :k] = _apply_fixed(cols[..., :k], fg, n)
        angle = params[block.gate.param_index]
        cur = _apply_rotation(cur, block.gate.generator, angle)
        if k:
            cols[..., :k] = _apply_rotation(cols[..., :k], block.gate.generator, angle)
        cols[..., k] = _insertion(cur, block.gate.generator)
        order.append(block.gate.param_index)
    for fg in circuit._tail:
        cur = _apply_fixed(cur, fg, n)
        if m:
            cols = _apply_fixed(cols, fg, n)
    jac = np.empty((d, m), dtype=complex)
    flat = cols.reshape(d, m)
    for pos, idx in enumerate(order):
        jac[:, idx] = flat[:, pos]
    return cur.reshape(-1), jac
