"""Reproducible sampling of Haar-random states/unitaries and the two loss
ensembles: targets at fixed overlap p with an anchor state, and block
unitaries that fix the anchor while acting Haar-randomly on its orthogonal
complement.

Randomness comes from counter-based Philox streams keyed by (seed,
stream_id), so identical keys give identical draws on any platform and
parallel sampling over disjoint stream ids is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHOGONALITY_ATOL = 1e-12


@dataclass(frozen=True)
class RngStream:
    """Philox-backed random stream addressed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {v}")

    def generator(self) -> np.random.Generator:
        """Fresh generator; the draw sequence depends only on (seed, stream_id)."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def offset(self, delta: int) -> RngStream:
        return RngStream(self.seed, self.stream_id + delta)


def _ginibre(dim_rows: int, dim_cols: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim_rows, dim_cols)) + 1j * rng.standard_normal((dim_rows, dim_cols))
    return z / np.sqrt(2.0)


def haar_state(dim: int, rng: RngStream) -> np.ndarray:
    """Haar-random pure state: normalized complex standard-normal vector."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    gen = rng.generator()
    z = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return z / np.linalg.norm(z)


def _haar_unitary_from(gen: np.random.Generator, dim: int) -> np.ndarray:
    """QR of a Ginibre matrix with R's diagonal phase-normalized to positive."""
    q, r = np.linalg.qr(_ginibre(dim, dim, gen))
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def haar_unitary(dim: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed unitary matrix."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return _haar_unitary_from(rng.generator(), dim)


def _anchor_array(anchor) -> np.ndarray:
    amps = getattr(anchor, "amplitudes", anchor)
    amps = np.asarray(amps, dtype=complex)
    if amps.ndim != 1:
        raise ValueError("anchor must be a vector")
    if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
        raise ValueError("anchor state is not unit norm")
    return amps


def _householder_parts(anchor: np.ndarray) -> tuple[complex, np.ndarray, float]:
    """Reflection data mapping lam*e0 to the anchor.

    With lam the phase of anchor[0] and w = anchor - lam*e0, the Householder
    reflection I - 2 w w^dag/|w|^2 sends lam*e0 to the anchor and carries
    span(e1..e_{d-1}) onto the anchor's orthogonal complement.
    """
    a0 = anchor[0]
    lam = a0 / abs(a0) if abs(a0) > 0 else 1.0 + 0j
    w = anchor.copy()
    w[0] -= lam
    return lam, w, np.vdot(w, w).real


def _reflect(w: np.ndarray, w_norm_sq: float, vec: np.ndarray) -> np.ndarray:
    if w_norm_sq <= 1e-24:  # anchor already lam*e0
        return vec
    return vec - (2.0 * np.vdot(w, vec) / w_norm_sq) * w


def _complement_basis(anchor: np.ndarray) -> np.ndarray:
    """(d, d-1) orthonormal basis of the orthogonal complement of `anchor`."""
    d = anchor.size
    _, w, w_norm_sq = _householder_parts(anchor)
    basis = np.eye(d, dtype=complex)[:, 1:]
    if w_norm_sq > 1e-24:
        basis = basis - (2.0 / w_norm_sq) * np.outer(w, w.conj() @ basis)
    return basis


def complement_state(anchor, rng: RngStream) -> np.ndarray:
    """Haar-random state in the orthogonal complement of `anchor`."""
    anchor = _anchor_array(anchor)
    d = anchor.size
    if d < 2:
        raise ValueError("complement sampling needs dim >= 2")
    gen = rng.generator()
    z = gen.standard_normal(d - 1) + 1j * gen.standard_normal(d - 1)
    z /= np.linalg.norm(z)
    embedded = np.zeros(d, dtype=complex)
    embedded[1:] = z
    _, w, w_norm_sq = _householder_parts(anchor)
    return _reflect(w, w_norm_sq, embedded)


@dataclass(frozen=True)
class EnsembleSpec:
    """Target ensemble: |phi> = p|anchor> + sqrt(1-p^2)|perp>, perp Haar in
    the complement of the anchor."""

    anchor: np.ndarray
    overlap_p: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "anchor", _anchor_array(self.anchor))
        if not 0.0 <= self.overlap_p <= 1.0:
            raise ValueError(f"overlap must be in [0, 1], got {self.overlap_p}")


def sample_target(spec: EnsembleSpec, rng: RngStream) -> np.ndarray:
    """Draw a target state with |<target|anchor>| = p exactly."""
    p = spec.overlap_p
    if p == 1.0:
        return spec.anchor.copy()
    if spec.anchor.size < 2:
        raise ValueError("target sampling with p < 1 needs dim >= 2")
    perp = complement_state(spec.anchor, rng)
    return p * spec.anchor + np.sqrt(1.0 - p * p) * perp


def sample_block_unitary(anchor, rng: RngStream) -> np.ndarray:
    """Unitary V = |anchor><anchor| + Q U Q^dag with U Haar on the complement
    (Q's columns span it).  V fixes the anchor exactly."""
    anchor = _anchor_array(anchor)
    d = anchor.size
    if d < 2:
        raise ValueError("block unitary sampling needs dim >= 2")
    q = _complement_basis(anchor)
    u_sub = _haar_unitary_from(rng.generator(), d - 1)
    return np.outer(anchor, anchor.conj()) + q @ u_sub @ q.conj().T
