"""Closed forms and Monte Carlo estimators for block-unitary (subspace Haar)
moments.

The ensemble consists of unitaries U = Pbar + P U P where P projects onto a
d_sub-dimensional subspace, the restriction of U to that subspace is Haar,
and Pbar = I - P.  First and second moments of such U admit exact closed
forms; the Monte Carlo side estimates the same integrands with entrywise
standard errors so the two routes can be compared at a few-sigma level.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ensembles import RngStream, _ginibre

PROJECTOR_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class SubspaceSetting:
    """Total space dimension plus the Hermitian idempotent projector P."""

    dim: int
    projector: np.ndarray
    d_sub: int = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.projector, dtype=complex)
        if p.shape != (self.dim, self.dim):
            raise ValueError(f"projector shape {p.shape} does not match dim {self.dim}")
        if np.max(np.abs(p - p.conj().T)) > PROJECTOR_ATOL:
            raise ValueError("projector is not Hermitian")
        if np.max(np.abs(p @ p - p)) > PROJECTOR_ATOL:
            raise ValueError("projector is not idempotent")
        d_sub = int(round(np.trace(p).real))
        if d_sub < 1:
            raise ValueError(f"projector rank must be >= 1, got trace {np.trace(p).real}")
        object.__setattr__(self, "projector", p)
        object.__setattr__(self, "d_sub", d_sub)

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.dim) - self.projector

    def basis(self) -> np.ndarray:
        """(dim, d_sub) orthonormal columns spanning range(P)."""
        eigvals, eigvecs = np.linalg.eigh(self.projector)
        cols = eigvecs[:, eigvals > 0.5]
        if cols.shape[1] != self.d_sub:
            raise ValueError("projector eigenvalues are not clustered at 0 and 1")
        return cols


def full_space_setting(dim: int) -> SubspaceSetting:
    return SubspaceSetting(dim, np.eye(dim))


# ---------------------------------------------------------------------------
# Closed forms.
# ---------------------------------------------------------------------------

def closed_form_e_u(setting: SubspaceSetting) -> np.ndarray:
    """E[U] = I - P."""
    return setting.complement


def closed_form_uau(setting: SubspaceSetting, a: np.ndarray) -> np.ndarray:
    """E[U^dag A U] = tr(PA)/d_sub P + (I-P) A (I-P)."""
    p, pbar, ds = setting.projector, setting.complement, setting.d_sub
    return np.trace(p @ a) / ds * p + pbar @ a @ pbar


def closed_form_uaubucu(setting: SubspaceSetting, a: np.ndarray, b: np.ndarray,
                        c: np.ndarray) -> np.ndarray:
    """E[U^dag A U B U^dag C U], the seven-term second-moment closed form."""
    if setting.d_sub < 2:
        raise ValueError("second-moment closed form needs d_sub >= 2")
    p, pbar, ds = setting.projector, setting.complement, setting.d_sub
    pa, pb, pc = p @ a, p @ b, p @ c
    tr_pa, tr_pb, tr_pc = np.trace(pa), np.trace(pb), np.trace(pc)
    tr_papc = np.trace(pa @ pc)
    out = pbar @ a @ pbar @ b @ pbar @ c @ pbar
    out += tr_pb / ds * (pbar @ a @ pc @ pbar)
    out += tr_pc / ds * (pbar @ a @ pbar @ b @ p)
    out += tr_pa / ds * (p @ b @ pbar @ c @ pbar)
    out += np.trace(pa @ pbar @ b @ pbar @ c) / ds * p
    out += tr_papc * tr_pb / ds**2 * p
    out += ((ds * tr_pa * tr_pc - tr_papc) / (ds * (ds**2 - 1))
            * (p @ b @ p - tr_pb / ds * p))
    return out


def closed_form_trace_product(setting: SubspaceSetting, a: np.ndarray, b: np.ndarray,
                              c: np.ndarray, d: np.ndarray) -> complex:
    """E[tr(U^dag A U B) tr(U^dag C U D)]."""
    if setting.d_sub < 2:
        raise ValueError("second-moment closed form needs d_sub >= 2")
    p, pbar, ds = setting.projector, setting.complement, setting.d_sub
    pa, pb, pc, pd = p @ a, p @ b, p @ c, p @ d
    tr_pa, tr_pb, tr_pc, tr_pd = np.trace(pa), np.trace(pb), np.trace(pc), np.trace(pd)
    tr_ab_bar = np.trace(pbar @ a @ pbar @ b)
    tr_cd_bar = np.trace(pbar @ c @ pbar @ d)
    tr_papc = np.trace(pa @ pc)
    tr_pbpd = np.trace(pb @ pd)
    out = tr_ab_bar * tr_cd_bar
    out += tr_ab_bar * tr_pc * tr_pd / ds + tr_cd_bar * tr_pa * tr_pb / ds
    out += np.trace(pb @ pbar @ a @ pc @ pbar @ d) / ds
    out += np.trace(pa @ pbar @ b @ pd @ pbar @ c) / ds
    out += (tr_pa * tr_pb * tr_pc * tr_pd + tr_papc * tr_pbpd) / (ds**2 - 1)
    out -= (tr_papc * tr_pb * tr_pd + tr_pa * tr_pc * tr_pbpd) / (ds * (ds**2 - 1))
    return complex(out)


def subspace_state_mean(setting: SubspaceSetting, a: np.ndarray) -> complex:
    """E[<phi|A|phi>] = tr(PA)/d_sub over Haar states phi in the subspace."""
    return complex(np.trace(setting.projector @ a) / setting.d_sub)


def subspace_state_second_moment(setting: SubspaceSetting, a: np.ndarray) -> complex:
    """E[<phi|A|phi>^2] = [tr((PA)^2) + tr(PA)^2] / (d_sub (d_sub + 1))."""
    pa = setting.projector @ a
    ds = setting.d_sub
    return complex((np.trace(pa @ pa) + np.trace(pa) ** 2) / (ds * (ds + 1)))


# ---------------------------------------------------------------------------
# Monte Carlo side.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MomentComparison:
    """Closed-form value next to its Monte Carlo estimate and standard error."""

    closed_form: np.ndarray | complex | None
    mc_estimate: np.ndarray
    mc_standard_error: np.ndarray
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if np.any(np.asarray(self.mc_standard_error) < 0):
            raise ValueError("standard errors must be nonnegative")

    def max_deviation_sigma(self, floor: float = 1e-12) -> float:
        """Largest entrywise |mc - closed| measured in standard errors."""
        diff = np.abs(np.asarray(self.mc_estimate) - np.asarray(self.closed_form))
        return float(np.max(diff / (np.asarray(self.mc_standard_error) + floor)))


def _sample_unitaries(setting: SubspaceSetting, basis: np.ndarray, rng: RngStream,
                      start: int, count: int) -> np.ndarray:
    """Block unitaries for streams rng.offset(start + i), i < count."""
    ds = setting.d_sub
    gin = np.empty((count, ds, ds), dtype=complex)
    for i in range(count):
        gin[i] = _ginibre(ds, ds, rng.offset(start + i).generator())
    q, r = np.linalg.qr(gin)
    phases = np.einsum("kii->ki", r).copy()
    phases /= np.abs(phases)
    u_sub = q * phases[:, None, :]
    pbar = setting.complement
    return pbar[None, :, :] + np.einsum("ai,kij,bj->kab", basis, u_sub, basis.conj())


def sample_subspace_unitary(setting: SubspaceSetting, rng: RngStream) -> np.ndarray:
    """One draw of U = Pbar + P U P with Haar restriction to range(P)."""
    return _sample_unitaries(setting, setting.basis(), rng, 0, 1)[0]


def mc_moments(setting: SubspaceSetting,
               integrands: dict[str, Callable[[np.ndarray], np.ndarray]],
               n_samples: int, rng: RngStream, closed_forms: dict | None = None,
               threads: int = 1, chunk: int = 1024) -> dict[str, MomentComparison]:
    """Estimate several moments on one shared stream of unitary samples.

    Each integrand maps a batch of unitaries (k, d, d) to per-sample values
    (k, ...).  Sample i uses stream rng.offset(i); chunk sums are reduced in
    fixed order, so results do not depend on the thread count.
    """
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    basis = setting.basis()
    names = list(integrands)
    starts = list(range(0, n_samples, chunk))

    def chunk_sums(start: int):
        count = min(chunk, n_samples - start)
        us = _sample_unitaries(setting, basis, rng, start, count)
        out = {}
        for name in names:
            values = np.asarray(integrands[name](us))
            out[name] = (values.sum(axis=0), (np.abs(values) ** 2).sum(axis=0))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(chunk_sums, starts))
    else:
        partials = [chunk_sums(s) for s in starts]

    results = {}
    for name in names:
        total = sum(p[name][0] for p in partials)
        total_sq = sum(p[name][1] for p in partials)
        mean = total / n_samples
        var = np.maximum(total_sq / n_samples - np.abs(mean) ** 2, 0.0)
        if n_samples > 1:
            var = var * n_samples / (n_samples - 1)
        se = np.sqrt(var / n_samples)
        cf = None if closed_forms is None else closed_forms.get(name)
        results[name] = MomentComparison(cf, mean, se, n_samples)
    return results


def mc_moment(setting: SubspaceSetting, integrand: Callable[[np.ndarray], np.ndarray],
              n_samples: int, rng: RngStream, closed_form=None,
              threads: int = 1) -> MomentComparison:
    """Monte Carlo moment of a per-sample integrand U -> value."""
    batched = lambda us: np.stack([integrand(u) for u in us])
    return mc_moments(setting, {"moment": batched}, n_samples, rng,
                      {"moment": closed_form}, threads=threads)["moment"]
