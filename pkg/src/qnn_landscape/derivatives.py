"""Loss functions, exact derivatives, QFI, and the local-minimum predicate.

Fidelity loss  L = 1 - |<target|psi(theta)>|^2  and local loss
L = <psi(theta)|H|psi(theta)>.  Gradients and Hessians are exact, built
from generator-insertion derivative states; the parameter-shift rule is
provided as an independent route.  The batched engines sweep the circuit
once per chunk of Monte Carlo co-states, so per-sample work reduces to
matrix products.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .circuits import (
    ParameterizedCircuit,
    _apply_fixed,
    _apply_fixed_adjoint,
    _apply_rotation,
    _check_params,
    _insertion,
    evaluate,
    evaluate_many,
    state_and_jacobian,
)
from .statevector import StateVector, _apply_pauli

SYMMETRY_ATOL = 1e-10


@dataclass(frozen=True)
class FidelityLoss:
    """L = 1 - |<target|psi>|^2."""

    target: np.ndarray

    def __post_init__(self):
        amps = self.target.amplitudes if isinstance(self.target, StateVector) \
            else np.asarray(self.target, dtype=complex)
        if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
            raise ValueError("target state is not unit norm")
        object.__setattr__(self, "target", amps)


@dataclass(frozen=True)
class LocalLoss:
    """L = <psi|H|psi> for a Hermitian observable H."""

    hamiltonian: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"H must be square, got shape {h.shape}")
        if np.max(np.abs(h - h.conj().T)) > SYMMETRY_ATOL:
            raise ValueError("H is not Hermitian")
        object.__setattr__(self, "hamiltonian", h)


LossKind = FidelityLoss | LocalLoss


@dataclass(frozen=True)
class Precision:
    """Tolerances of the local-minimum predicate: gradient eps1, Hessian eps2."""

    eps1: float
    eps2: float

    def __post_init__(self):
        for name in ("eps1", "eps2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def _state_dim_check(circuit: ParameterizedCircuit, kind: LossKind) -> None:
    d = 2**circuit.n_qubits
    size = kind.target.size if isinstance(kind, FidelityLoss) else kind.hamiltonian.shape[0]
    if size != d:
        raise ValueError(f"loss dimension {size} does not match circuit dimension {d}")


def loss(circuit: ParameterizedCircuit, params, kind: LossKind) -> float:
    """Scalar loss at the given parameters."""
    _state_dim_check(circuit, kind)
    psi = evaluate(circuit, params).amplitudes
    if isinstance(kind, FidelityLoss):
        value = 1.0 - abs(np.vdot(kind.target, psi)) ** 2
        return min(max(value, 0.0), 1.0)
    return float(np.real(np.vdot(psi, kind.hamiltonian @ psi)))


def _loss_of_states(states: np.ndarray, kind: LossKind) -> np.ndarray:
    """Loss per column of a (d, B) state batch."""
    if isinstance(kind, FidelityLoss):
        return 1.0 - np.abs(kind.target.conj() @ states) ** 2
    h = kind.hamiltonian
    return np.einsum("ib,ib->b", states.conj(), h @ states).real


def gradient_exact(circuit: ParameterizedCircuit, params, kind: LossKind) -> np.ndarray:
    """Exact gradient from derivative states."""
    _state_dim_check(circuit, kind)
    psi, jac = state_and_jacobian(circuit, params)
    if isinstance(kind, FidelityLoss):
        phi = kind.target
        overlaps = phi.conj() @ jac          # <phi|d_mu psi>
        c = np.vdot(phi, psi)                # <phi|psi>
        return -2.0 * np.real(overlaps * np.conj(c))
    hpsi = kind.hamiltonian @ psi
    return 2.0 * np.real(hpsi.conj() @ jac)  # 2 Re <psi|H|d_mu psi>


def gradient_shift(circuit: ParameterizedCircuit, params, kind: LossKind) -> np.ndarray:
    """Parameter-shift gradient: c_mu * [L(theta + s e_mu) - L(theta - s e_mu)],
    s_mu = pi / (4 c_mu)."""
    _state_dim_check(circuit, kind)
    params = _check_params(circuit, params)
    m = circuit.m_params
    omega = circuit.generator_norms()
    shifts = np.pi / (4.0 * omega)
    thetas = np.repeat(params[None, :], 2 * m, axis=0)
    thetas[np.arange(m), np.arange(m)] += shifts
    thetas[m + np.arange(m), np.arange(m)] -= shifts
    losses = _loss_of_states(evaluate_many(circuit, thetas), kind)
    return omega * (losses[:m] - losses[m:])


# ---------------------------------------------------------------------------
# Co-state overlap engine.
#
# For a batch of co-state columns chi the engine returns, per column,
#   c   = <chi|psi>
#   G_m = <chi|d_mu psi>
#   T_mn = <chi|d_mu d_nu psi>
# restricted to a parameter subset.  One backward pass pulls the co-states
# through the circuit (storing snapshots at the subset gates) and one
# forward pass carries all first-derivative columns, so the total cost is
# O(M) batched gate applications plus O(M^2) inner products per chunk.
# ---------------------------------------------------------------------------

def _normalize_subset(circuit: ParameterizedCircuit, subset) -> np.ndarray:
    if subset is None:
        return np.arange(circuit.m_params)
    idx = np.asarray(sorted(subset), dtype=int)
    if idx.size == 0:
        raise ValueError("parameter subset is empty")
    if idx[0] < 0 or idx[-1] >= circuit.m_params or len(set(idx.tolist())) != idx.size:
        raise ValueError(f"invalid parameter subset {subset!r}")
    return idx


def _costate_overlaps_chunk(circuit: ParameterizedCircuit, params: np.ndarray,
                            costates: np.ndarray, subset: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raw overlaps (c, G, T) for one chunk of co-state columns (d, s)."""
    n = circuit.n_qubits
    blocks, tail = circuit._blocks, circuit._tail
    subset_set = set(subset.tolist())
    s = costates.shape[1]
    shape = (2,) * n + (s,)

    # Backward: snapshots of (gates after block)^dag |chi> at each subset gate.
    beta: dict[int, np.ndarray] = {}
    cur = costates.reshape(shape).copy()
    for fg in reversed(tail):
        cur = _apply_fixed_adjoint(cur, fg, n)
    for pos in range(len(blocks) - 1, -1, -1):
        block = blocks[pos]
        if block.gate.param_index in subset_set:
            beta[pos] = cur
        # step below this block: undo its rotation and fixed prefix
        cur = _apply_rotation(cur, block.gate.generator,
                              -params[block.gate.param_index])
        for fg in reversed(block.pre):
            cur = _apply_fixed_adjoint(cur, fg, n)

    # Forward: carry subset derivative columns, emit one T row per subset gate.
    m = subset.size
    cur = StateVector.zero(n).tensor().astype(complex)
    cols = np.zeros((2,) * n + (m,), dtype=complex)
    t_mat = np.zeros((s, m, m), dtype=complex)
    order: list[int] = []  # subset param indices in circuit order
    k = 0
    for pos, block in enumerate(blocks):
        for fg in block.pre:
            cur = _apply_fixed(cur, fg, n)
            if k:
                cols[..., :k] = _apply_fixed(cols[..., :k], fg, n)
        gen = block.gate.generator
        angle = params[block.gate.param_index]
        cur = _apply_rotation(cur, gen, angle)
        if k:
            cols[..., :k] = _apply_rotation(cols[..., :k], gen, angle)
        if block.gate.param_index in subset_set:
            cols[..., k] = _insertion(cur, gen)
            order.append(block.gate.param_index)
            k += 1
            w = gen.coefficient * _apply_pauli(beta.pop(pos), gen.pauli.letters)
            flat_w = w.reshape(-1, s)
            flat_cols = cols[..., :k].reshape(-1, k)
            t_mat[:, :k, k - 1] = -1j * (flat_w.conj().T @ flat_cols)
    for fg in tail:
        cur = _apply_fixed(cur, fg, n)
        cols = _apply_fixed(cols, fg, n)

    psi = cur.reshape(-1)
    jac = cols.reshape(-1, m)
    c_vec = costates.conj().T @ psi
    g_mat = costates.conj().T @ jac

    # mirror the strict upper triangle (partial derivatives commute)
    rows, colsix = np.triu_indices(m, 1)
    t_mat[:, colsix, rows] = t_mat[:, rows, colsix]

    # reorder from circuit order to ascending parameter index
    perm = np.argsort(np.asarray(order))
    return c_vec, g_mat[:, perm], t_mat[:, perm][:, :, perm]


def _chunk_size(circuit: ParameterizedCircuit, m_sub: int,
                mem_budget: int = 1 << 26) -> int:
    d = 2**circuit.n_qubits
    per_col = 16 * (m_sub * d + 2 * m_sub * m_sub)  # beta snapshots + T matrix
    return max(8, mem_budget // max(per_col, 1))


def iter_fidelity_derivatives(circuit: ParameterizedCircuit, params,
                              targets: np.ndarray, subset=None,
                              mem_budget: int = 1 << 26
                              ) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (start, grads, hessians) for chunks of target columns (d, S).

    Gradients have shape (s, m) and Hessians (s, m, m), both restricted to
    the (sorted) parameter subset.
    """
    params = _check_params(circuit, params)
    subset = _normalize_subset(circuit, subset)
    targets = np.asarray(targets, dtype=complex)
    if targets.shape[0] != 2**circuit.n_qubits:
        raise ValueError("target columns do not match circuit dimension")
    total = targets.shape[1]
    chunk = _chunk_size(circuit, subset.size, mem_budget)
    for start in range(0, total, chunk):
        block = targets[:, start:start + chunk]
        c_vec, g_mat, t_mat = _costate_overlaps_chunk(circuit, params, block, subset)
        grads = -2.0 * np.real(g_mat * np.conj(c_vec)[:, None])
        outer = np.einsum("sk,sl->skl", g_mat, g_mat.conj())
        hess = -2.0 * (np.real(t_mat * np.conj(c_vec)[:, None, None]) + outer.real)
        yield start, grads, hess


def iter_local_loss_derivatives(circuit: ParameterizedCircuit, params,
                                hamiltonian: np.ndarray, unitaries: np.ndarray,
                                mem_budget: int = 1 << 26
                                ) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (start, grads, hessians) of L_V = <psi|V^dag H V|psi> over a
    batch of unitaries (S, d, d) at fixed theta.

    For block unitaries that fix |psi(theta)> this is the loss-function
    ensemble of the conjugated-Hamiltonian construction; the formulas below
    are valid for arbitrary unitaries.
    """
    params = _check_params(circuit, params)
    kind = LocalLoss(hamiltonian)
    _state_dim_check(circuit, kind)
    h = kind.hamiltonian
    subset = _normalize_subset(circuit, None)
    psi, jac = state_and_jacobian(circuit, params)
    unitaries = np.asarray(unitaries, dtype=complex)
    total = unitaries.shape[0]
    chunk = _chunk_size(circuit, subset.size, mem_budget)
    for start in range(0, total, chunk):
        vs = unitaries[start:start + chunk]
        vpsi = np.einsum("sij,j->si", vs, psi)
        hvpsi = np.einsum("ij,sj->si", h, vpsi)
        costates = np.einsum("sji,sj->is", vs.conj(), hvpsi)  # V^dag H V psi columns
        _, g_mat, t_mat = _costate_overlaps_chunk(circuit, params, costates, subset)
        # first-order term <d_mu psi|V^dag H V|d_nu psi>
        w = np.einsum("sij,jk->sik", vs, jac)
        hw = np.einsum("ij,sjk->sik", h, w)
        first = np.einsum("sik,sil->skl", w.conj(), hw)
        grads = 2.0 * np.real(g_mat)
        hess = 2.0 * (np.real(t_mat) + first.real)
        yield start, grads, hess


def hessian(circuit: ParameterizedCircuit, params, kind: LossKind) -> np.ndarray:
    """Exact symmetric Hessian of the loss."""
    _state_dim_check(circuit, kind)
    params = _check_params(circuit, params)
    subset = _normalize_subset(circuit, None)
    if isinstance(kind, FidelityLoss):
        _, _, hess = next(iter_fidelity_derivatives(circuit, params,
                                                    kind.target[:, None]))
        out = hess[0]
    else:
        psi, jac = state_and_jacobian(circuit, params)
        hpsi = kind.hamiltonian @ psi
        _, _, t_mat = _costate_overlaps_chunk(circuit, params, hpsi[:, None], subset)
        first = jac.conj().T @ (kind.hamiltonian @ jac)
        out = 2.0 * (np.real(t_mat[0]) + first.real)
    return 0.5 * (out + out.T)


def qfi(circuit: ParameterizedCircuit, params) -> np.ndarray:
    """Quantum Fisher information matrix
    F_mn = 2 Re[<d_m psi|d_n psi> - <d_m psi|psi><psi|d_n psi>]."""
    psi, jac = state_and_jacobian(circuit, params)
    v = jac.conj().T @ psi  # <d_mu psi|psi>
    f = 2.0 * np.real(jac.conj().T @ jac - np.outer(v, v.conj()))
    return 0.5 * (f + f.T)


# ---------------------------------------------------------------------------
# Symmetric eigenvalues by cyclic Jacobi rotations (round-robin ordering,
# disjoint pairs per round applied simultaneously).
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Rounds of disjoint index pairs covering every (p, q) once (circle method)."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    arr = players[:]
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = arr[i], arr[m - 1 - i]
            if a >= 0 and b >= 0:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        arr = [arr[0], arr[-1]] + arr[1:-1]
    return tuple(rounds)


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0)))


def _parallel_sweep(a: np.ndarray, n: int, skip_below: float) -> None:
    """One sweep of simultaneous rotations over disjoint pairs per round."""
    for p, q in _round_robin(n):
        apq = a[p, q]
        diff = a[q, q] - a[p, p]
        safe = np.abs(apq) > skip_below
        denom = np.where(safe, 2.0 * apq, 1.0)
        tau = np.where(safe, diff / denom, 0.0)
        t = np.where(safe,
                     np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau)),
                     0.0)
        if not np.any(t):
            continue
        c = 1.0 / np.hypot(1.0, t)
        s = t * c
        rp, rq = a[p, :].copy(), a[q, :].copy()
        a[p, :] = c[:, None] * rp - s[:, None] * rq
        a[q, :] = s[:, None] * rp + c[:, None] * rq
        cp, cq = a[:, p].copy(), a[:, q].copy()
        a[:, p] = cp * c - cq * s
        a[:, q] = cp * s + cq * c


def _sequential_sweep(a: np.ndarray, n: int, skip_below: float) -> None:
    """One sweep of rotations applied one pair at a time (classical order)."""
    for p_arr, q_arr in _round_robin(n):
        for p, q in zip(p_arr.tolist(), q_arr.tolist()):
            apq = a[p, q]
            if abs(apq) <= skip_below:
                continue
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.hypot(1.0, t)
            s = t * c
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c * rp - s * rq
            a[q, :] = s * rp + c * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c


def jacobi_eigenvalues(matrix: np.ndarray, tol: float = 1e-12,
                       max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a real symmetric matrix, ascending.

    Cyclic Jacobi: sweeps of Givens rotations over every off-diagonal pair
    until the off-diagonal Frobenius norm drops below `tol`.  Sweeps apply
    disjoint pairs simultaneously for speed; if a sweep stops making
    progress (simultaneous rotations can cycle near convergence), the
    remaining sweeps fall back to one-at-a-time rotations, whose
    convergence is the classical guarantee.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_ATOL:
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    a = a.copy()
    # rotations on entries this small cannot lift the off-norm back above tol
    skip_below = tol / (2.0 * n * n)
    off = _off_diagonal_norm(a)
    parallel = True
    for _ in range(max_sweeps):
        if off < tol:
            return np.sort(np.diag(a))
        if parallel:
            _parallel_sweep(a, n, skip_below)
        else:
            _sequential_sweep(a, n, skip_below)
        new_off = _off_diagonal_norm(a)
        if parallel and new_off >= 0.5 * off:
            parallel = False
        off = new_off
    if off < tol:
        return np.sort(np.diag(a))
    raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of a real symmetric matrix (cyclic Jacobi)."""
    return float(jacobi_eigenvalues(matrix)[0])


def is_local_min(grad: np.ndarray, hess: np.ndarray, prec: Precision) -> bool:
    """LocalMin test: every |grad_mu| <= eps1 and H > -eps2*I (strict)."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    if hess.shape != (grad.size, grad.size):
        raise ValueError(
            f"gradient size {grad.size} does not match Hessian shape {hess.shape}"
        )
    if np.max(np.abs(grad)) > prec.eps1:
        return False
    return min_eigenvalue(hess) > -prec.eps2
