"""Dense statevector representation and gate kernels for N-qubit pure states.

Convention: qubit 0 is the most significant bit of the basis index, so the
basis state |q0 q1 ... q_{N-1}> sits at index sum_k q_k 2^(N-1-k).  With
that ordering, reshaping an amplitude vector to shape (2,)*N puts qubit k
on tensor axis k.  The private kernels accept extra trailing axes, so
batches of states ride along untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_ATOL = 1e-12
UNITARY_ATOL = 1e-10

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class StateVector:
    """Unit-norm complex amplitude vector of an n_qubits pure state."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm deviates from 1 by {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        """|0...0>."""
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> StateVector:
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log2(amps.size)))
        if 2**n != amps.size:
            raise ValueError(f"amplitude count {amps.size} is not a power of two")
        return cls(n, amps)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to (2,)*n_qubits (read-only view)."""
        return self.amplitudes.reshape((2,) * self.n_qubits)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. letters="IXZY".

    As an operator it is Hermitian, unitary and involutory, with operator
    norm exactly 1.
    """

    n_qubits: int
    letters: str

    def __post_init__(self):
        if len(self.letters) != self.n_qubits:
            raise ValueError(
                f"got {len(self.letters)} letters for {self.n_qubits} qubits"
            )
        bad = set(self.letters) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)}")

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> PauliString:
        """Pauli `letter` on one qubit, identity elsewhere."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        letters = "".join(letter if k == qubit else "I" for k in range(n_qubits))
        return cls(n_qubits, letters)

    @property
    def weight(self) -> int:
        return sum(1 for c in self.letters if c != "I")

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (test/oracle sizes only)."""
        out = np.array([[1.0 + 0j]])
        for c in self.letters:
            out = np.kron(out, PAULI_MATRICES[c])
        return out


@dataclass(frozen=True, eq=False)
class DenseUnitary:
    """Explicit unitary matrix, validated to U^dag U = I within 1e-10."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        mat = np.array(self.entries, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"expected shape {(self.dim, self.dim)}, got {mat.shape}")
        defect = np.linalg.norm(mat.conj().T @ mat - np.eye(self.dim))
        if defect > UNITARY_ATOL:
            raise ValueError(f"matrix is not unitary: ||U^dag U - I|| = {defect:.3e}")
        object.__setattr__(self, "entries", _readonly(mat))


# ---------------------------------------------------------------------------
# Tensor kernels.  `tensor` has shape (2,)*n_qubits + arbitrary trailing axes;
# qubit axes are always the leading ones, so partial index tuples apply to
# qubits only and any batch axes broadcast through.
# ---------------------------------------------------------------------------

def _apply_gate2(tensor: np.ndarray, qubit: int, gate: np.ndarray) -> np.ndarray:
    """Apply a 2x2 gate on one qubit axis."""
    out = np.tensordot(gate, tensor, axes=([1], [qubit]))
    return np.moveaxis(out, 0, qubit)


def _apply_gate2_cols(tensor: np.ndarray, qubit: int, gates: np.ndarray) -> np.ndarray:
    """Apply per-column 2x2 gates; gates has shape (B, 2, 2), last tensor axis is B."""
    moved = np.moveaxis(tensor, qubit, -2)  # (..., 2, B)
    out = np.einsum("bij,...jb->...ib", gates, moved)
    return np.moveaxis(out, -2, qubit)


def _qubit_index(n_qubits: int, assignments: dict[int, int]) -> tuple:
    idx = [slice(None)] * n_qubits
    for qubit, value in assignments.items():
        idx[qubit] = value
    return tuple(idx)


def _apply_cnot(tensor: np.ndarray, control: int, target: int, n_qubits: int) -> np.ndarray:
    out = tensor.copy()
    i10 = _qubit_index(n_qubits, {control: 1, target: 0})
    i11 = _qubit_index(n_qubits, {control: 1, target: 1})
    out[i10] = tensor[i11]
    out[i11] = tensor[i10]
    return out


def _apply_cz(tensor: np.ndarray, control: int, target: int, n_qubits: int) -> np.ndarray:
    out = tensor.copy()
    i11 = _qubit_index(n_qubits, {control: 1, target: 1})
    out[i11] = -out[i11]
    return out


def _apply_pauli(tensor: np.ndarray, letters: str) -> np.ndarray:
    """Apply a Pauli string; `letters` indexed by qubit."""
    n = len(letters)
    out = tensor.copy()
    for qubit, letter in enumerate(letters):
        if letter == "I":
            continue
        if letter == "Z":
            i1 = _qubit_index(n, {qubit: 1})
            out[i1] = -out[i1]
        elif letter == "X":
            out = np.ascontiguousarray(np.flip(out, axis=qubit))
        else:  # Y: (Yv)[1] = i v[0], (Yv)[0] = -i v[1]
            out = np.ascontiguousarray(np.flip(out, axis=qubit))
            i0 = _qubit_index(n, {qubit: 0})
            i1 = _qubit_index(n, {qubit: 1})
            out[i1] = 1j * out[i1]
            out[i0] = -1j * out[i0]
    return out


def _apply_dense(tensor: np.ndarray, qubits: tuple[int, ...], matrix: np.ndarray) -> np.ndarray:
    """Apply a 2^k x 2^k matrix on the listed qubits."""
    k = len(qubits)
    moved = np.moveaxis(tensor, qubits, range(k))
    rest = moved.shape[k:]
    flat = moved.reshape(2**k, -1)
    out = (matrix @ flat).reshape((2,) * k + rest)
    return np.moveaxis(out, range(k), qubits)


# ---------------------------------------------------------------------------
# Public operations (value semantics: a new StateVector is returned).
# ---------------------------------------------------------------------------

def apply_one_qubit(state: StateVector, qubit: int, gate: np.ndarray,
                    validate: bool = True) -> StateVector:
    """Apply a 2x2 gate to one qubit."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    gate = np.asarray(gate, dtype=complex)
    if validate:
        defect = np.linalg.norm(gate.conj().T @ gate - np.eye(2))
        if defect > UNITARY_ATOL:
            raise ValueError(f"gate is not unitary: ||U^dag U - I|| = {defect:.3e}")
    out = _apply_gate2(state.tensor(), qubit, gate)
    return StateVector(state.n_qubits, out.reshape(-1))


def apply_controlled_pauli(state: StateVector, control: int, target: int,
                           kind: str) -> StateVector:
    """Apply CNOT = I (+) X or CZ = I (+) Z on (control, target)."""
    n = state.n_qubits
    for q in (control, target):
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for {n} qubits")
    if control == target:
        raise ValueError("control and target must differ")
    if kind == "CNOT":
        out = _apply_cnot(state.tensor(), control, target, n)
    elif kind == "CZ":
        out = _apply_cz(state.tensor(), control, target, n)
    else:
        raise ValueError(f"unknown controlled gate kind {kind!r}")
    return StateVector(n, out.reshape(-1))


def pauli_apply(state: StateVector, p: PauliString) -> StateVector:
    """Apply the tensor-product Pauli operator to the state."""
    if p.n_qubits != state.n_qubits:
        raise ValueError(
            f"Pauli string on {p.n_qubits} qubits applied to {state.n_qubits}-qubit state"
        )
    out = _apply_pauli(state.tensor(), p.letters)
    return StateVector(state.n_qubits, out.reshape(-1))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clamped to [0, 1] against floating-point rounding."""
    value = abs(inner_product(a, b)) ** 2
    return min(max(value, 0.0), 1.0)
