"""Closed-form landscape statistics and local-minimum probability bounds.

For the fidelity loss over the fixed-overlap target ensemble (overlap p,
Hilbert dimension d):

    f1(p, d) = p^2 (1 - p^2) / (d - 1)
    f2(p, d) = 32 (1 - p^2) / (d - 1) * [p^2 + 2 (1 - p^2) / d]

The gradient at the anchor point has mean zero and per-component variance
f1 * F_mumu; the Hessian has mean (d p^2 - 1)/(d - 1) * F and entrywise
variance bounded by f2 ||Omega_mu||^2 ||Omega_nu||^2, with F the quantum
Fisher information matrix.  The local-loss analogues replace (p, d) with
moments of the observable H in the anchor state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_p_d(p: float, d: int) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"overlap must be in [0, 1], got {p}")
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")


def f1(p: float, d: int) -> float:
    """Gradient-variance coefficient p^2(1-p^2)/(d-1)."""
    _check_p_d(p, d)
    return p * p * (1.0 - p * p) / (d - 1)


def f2(p: float, d: int) -> float:
    """Hessian-variance coefficient 32(1-p^2)/(d-1) [p^2 + 2(1-p^2)/d]."""
    _check_p_d(p, d)
    q2 = 1.0 - p * p
    return 32.0 * q2 / (d - 1) * (p * p + 2.0 * q2 / d)


def critical_loss(d: int) -> float:
    """Loss threshold 1 - 1/d below which the mean Hessian turns PSD."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return 1.0 - 1.0 / d


def expected_gradient_variance(p: float, d: int, qfi_diag: np.ndarray) -> np.ndarray:
    """Per-component gradient variance f1(p,d) * F_mumu."""
    qfi_diag = np.asarray(qfi_diag, dtype=float)
    if np.any(qfi_diag < -1e-10):
        raise ValueError("QFI diagonal must be nonnegative")
    return f1(p, d) * np.clip(qfi_diag, 0.0, None)


def expected_hessian(p: float, d: int, qfi: np.ndarray) -> np.ndarray:
    """Mean Hessian (d p^2 - 1)/(d - 1) * F."""
    _check_p_d(p, d)
    return (d * p * p - 1.0) / (d - 1.0) * np.asarray(qfi, dtype=float)


def hessian_variance_bound(p: float, d: int, omega: np.ndarray, mu: int, nu: int) -> float:
    """Upper bound f2(p,d) ||Omega_mu||^2 ||Omega_nu||^2 on one Hessian entry."""
    omega = np.asarray(omega, dtype=float)
    for idx in (mu, nu):
        if not 0 <= idx < omega.size:
            raise ValueError(f"index {idx} out of range for {omega.size} generators")
    return f2(p, d) * omega[mu] ** 2 * omega[nu] ** 2


def hessian_variance_bounds(p: float, d: int, omega: np.ndarray) -> np.ndarray:
    """Matrix of entrywise Hessian-variance bounds."""
    omega_sq = np.asarray(omega, dtype=float) ** 2
    return f2(p, d) * np.outer(omega_sq, omega_sq)


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the not-a-local-minimum probability bound."""

    p: float
    d: int
    omega_sq_norm: float  # sum of squared generator norms ||omega||_2^2
    e_star: float         # minimal QFI eigenvalue
    eps1: float
    eps2: float

    def __post_init__(self):
        _check_p_d(self.p, self.d)
        if not self.omega_sq_norm > 0:
            raise ValueError("omega_sq_norm must be positive")
        if self.e_star < 0 or self.eps1 < 0 or self.eps2 < 0:
            raise ValueError("e_star, eps1, eps2 must be nonnegative")


def theorem1_bound(inputs: BoundInputs) -> float:
    """Bound on Pr[not LocalMin] for the fidelity loss:

        2 f1 ||omega||^2 / eps1^2 + f2 ||omega||^4 / ((dp^2-1)/(d-1) e* + eps2)^2

    Requires the loss below the critical value, i.e. p^2 > 1/d.  The value
    is reported as-is (it may exceed 1).
    """
    p, d = inputs.p, inputs.d
    if not p * p > 1.0 / d:
        raise ValueError(
            f"bound needs p^2 > 1/d (loss below the critical value 1 - 1/d); "
            f"got p^2 = {p * p:.6g}, 1/d = {1.0 / d:.6g}"
        )
    if inputs.eps1 <= 0:
        raise ValueError("eps1 must be positive for the gradient term")
    curvature = (d * p * p - 1.0) / (d - 1.0) * inputs.e_star + inputs.eps2
    if curvature <= 0:
        raise ValueError("(dp^2-1)/(d-1) e* + eps2 must be positive")
    w2 = inputs.omega_sq_norm
    return (2.0 * f1(p, d) * w2 / inputs.eps1**2
            + f2(p, d) * w2 * w2 / curvature**2)


def landscape_expectation(p: float, d: int, g: float) -> float:
    """Mean loss 1 - p^2 + (d p^2 - 1)/(d - 1) g over the target ensemble,
    with g the fidelity distance of the output state from the anchor."""
    _check_p_d(p, d)
    if not -1e-12 <= g <= 1.0 + 1e-12:
        raise ValueError(f"g must be in [0, 1], got {g}")
    return 1.0 - p * p + (d * p * p - 1.0) / (d - 1.0) * g


def landscape_variance(p: float, d: int, g: float) -> float:
    """Loss variance over the target ensemble:
    (1-p^2)/(d-1) g [4p^2 - (2p^2 - (d-2)(1-p^2)/(d(d-1))) g]."""
    _check_p_d(p, d)
    if not -1e-12 <= g <= 1.0 + 1e-12:
        raise ValueError(f"g must be in [0, 1], got {g}")
    q2 = 1.0 - p * p
    inner = 4.0 * p * p - (2.0 * p * p - (d - 2.0) * q2 / (d * (d - 1.0))) * g
    return q2 / (d - 1.0) * g * inner


def axis_profile(qfi_mumu: float, theta_offset: float) -> float:
    """Fidelity distance along one parameter axis for an involutory
    generator (Omega^2 = I): g = (1/2) F_mumu sin^2(delta)."""
    if qfi_mumu < 0:
        raise ValueError("QFI diagonal entry must be nonnegative")
    return 0.5 * qfi_mumu * np.sin(theta_offset) ** 2


# ---------------------------------------------------------------------------
# Local-loss (energy expectation) analogues over the block-unitary ensemble.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalLossStats:
    """Moments of the observable entering the local-loss coefficients."""

    hamiltonian_trace: float   # tr H
    hamiltonian_sq_trace: float  # tr(H^2) = ||H||_2^2
    h_mean: float              # <H> in the anchor state
    h_sq_mean: float           # <H^2> in the anchor state
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if self.h_sq_mean < self.h_mean**2 - 1e-12:
            raise ValueError("<H^2> - <H>^2 must be nonnegative")

    @classmethod
    def from_hamiltonian(cls, hamiltonian: np.ndarray, anchor: np.ndarray) -> LocalLossStats:
        h = np.asarray(hamiltonian, dtype=complex)
        psi = np.asarray(anchor, dtype=complex)
        hpsi = h @ psi
        return cls(
            hamiltonian_trace=float(np.trace(h).real),
            hamiltonian_sq_trace=float(np.sum(np.abs(h) ** 2)),
            h_mean=float(np.vdot(psi, hpsi).real),
            h_sq_mean=float(np.vdot(hpsi, hpsi).real),
            d=h.shape[0],
        )

    @property
    def h_variance(self) -> float:
        return max(self.h_sq_mean - self.h_mean**2, 0.0)


def local_loss_f1(stats: LocalLossStats) -> float:
    """Gradient-variance coefficient (<H^2> - <H>^2)/(d-1)."""
    return stats.h_variance / (stats.d - 1)


def local_loss_f2(stats: LocalLossStats) -> float:
    """Hessian-variance coefficient
    32 [(<H^2> - <H>^2)/(d-1) + 2 ||H||_2^2 / (d(d-2))]; needs d >= 3."""
    if stats.d <= 2:
        raise ValueError(f"local-loss f2 needs d >= 3, got d = {stats.d}")
    return 32.0 * (stats.h_variance / (stats.d - 1)
                   + 2.0 * stats.hamiltonian_sq_trace / (stats.d * (stats.d - 2)))


def local_loss_expected_hessian(tr_h: float, loss_star: float, d: int,
                                qfi: np.ndarray) -> np.ndarray:
    """Mean Hessian (tr H - d L*)/(d - 1) * F over the block-unitary ensemble."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return (tr_h - d * loss_star) / (d - 1.0) * np.asarray(qfi, dtype=float)


def theorem_s9_bound(tr_h: float, loss_star: float, d: int, f1_h: float,
                     f2_h: float, omega_sq_norm: float, e_star: float,
                     eps1: float, eps2: float) -> float:
    """Local-loss bound on Pr[not LocalMin]:

        2 f1(H,d) ||omega||^2 / eps1^2
        + f2(H,d) ||omega||^4 / ((tr H - d L*)/(d-1) e* + eps2)^2

    Requires L* < tr H / d.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not loss_star < tr_h / d:
        raise ValueError(
            f"bound needs L* < tr H / d; got L* = {loss_star:.6g}, "
            f"tr H / d = {tr_h / d:.6g}"
        )
    if eps1 <= 0:
        raise ValueError("eps1 must be positive for the gradient term")
    curvature = (tr_h - d * loss_star) / (d - 1.0) * max(e_star, 0.0) + eps2
    if curvature <= 0:
        raise ValueError("(tr H - d L*)/(d-1) e* + eps2 must be positive")
    return (2.0 * f1_h * omega_sq_norm / eps1**2
            + f2_h * omega_sq_norm**2 / curvature**2)
