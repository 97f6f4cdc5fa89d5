"""Monte Carlo validation of the block-unitary (subspace Haar) moment
formulas, plus exact full-space reduction checks.
"""
from __future__ import annotations

import numpy as np

from ..ensembles import _ginibre
from ..haar_moments import (
    SubspaceSetting,
    closed_form_e_u,
    closed_form_trace_product,
    closed_form_uau,
    closed_form_uaubucu,
    full_space_setting,
    mc_moments,
    subspace_state_mean,
    subspace_state_second_moment,
)
from ..ensembles import haar_unitary
from .common import AUX_LOCAL, RunResult, cell_stream
from .config import ExperimentConfig
from .records import CheckTally, equality_z

REDUCTION_ATOL = 1e-12


def _full_space_uau(a: np.ndarray) -> np.ndarray:
    d = a.shape[0]
    return np.trace(a) / d * np.eye(d)


def _full_space_uaubucu(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = a.shape[0]
    eye = np.eye(d)
    term1 = np.trace(a @ c) * np.trace(b) / d**2 * eye
    coeff = (d * np.trace(a) * np.trace(c) - np.trace(a @ c)) / (d * (d**2 - 1))
    return term1 + coeff * (b - np.trace(b) / d * eye)


def _full_space_trace_product(a, b, c, d_op) -> complex:
    d = a.shape[0]
    out = (np.trace(a) * np.trace(b) * np.trace(c) * np.trace(d_op)
           + np.trace(a @ c) * np.trace(b @ d_op)) / (d**2 - 1)
    out -= (np.trace(a @ c) * np.trace(b) * np.trace(d_op)
            + np.trace(a) * np.trace(c) * np.trace(b @ d_op)) / (d * (d**2 - 1))
    return complex(out)


def _setting_cell(config: ExperimentConfig, cell_index: int, dim: int,
                  d_sub: int, threads: int):
    """MC-vs-closed-form comparisons for one (dim, d_sub) setting."""
    aux = lambda k: cell_stream(config.seed, cell_index, AUX_LOCAL + k)
    if d_sub == dim:
        setting = full_space_setting(dim)
    else:
        basis = haar_unitary(dim, aux(0))[:, :d_sub]
        setting = SubspaceSetting(dim, basis @ basis.conj().T)
    ops = {name: _ginibre(dim, dim, aux(1 + k).generator())
           for k, name in enumerate("abcd")}
    a, b, c, d_op = ops["a"], ops["b"], ops["c"], ops["d"]
    phi0 = setting.basis()[:, 0]

    def uau(us):
        return np.einsum("kji,jl,klm->kim", us.conj(), a, us)

    def uaubucu(us):
        x = np.einsum("kji,jl,klm->kim", us.conj(), a, us)
        y = np.einsum("kji,jl,klm->kim", us.conj(), c, us)
        return np.einsum("kij,jl,klm->kim", x, b, y)

    def trace_product(us):
        x = np.einsum("kji,jl,klm->kim", us.conj(), a, us)
        y = np.einsum("kji,jl,klm->kim", us.conj(), c, us)
        return np.einsum("kij,ji->k", x, b) * np.einsum("kij,ji->k", y, d_op)

    def state_mean(us):
        states = np.einsum("kij,j->ki", us, phi0)
        return np.einsum("ki,ij,kj->k", states.conj(), a, states)

    def state_second(us):
        return state_mean(us) ** 2

    integrands = {
        "lemma_s2_first_moment": lambda us: us,
        "lemma_s3_uau": uau,
        "lemma_s5_uaubucu": uaubucu,
        "lemma_s6_trace_product": trace_product,
        "corollary_s4_state_mean": state_mean,
        "corollary_s6_state_second": state_second,
    }
    closed = {
        "lemma_s2_first_moment": closed_form_e_u(setting).astype(complex),
        "lemma_s3_uau": closed_form_uau(setting, a),
        "lemma_s5_uaubucu": closed_form_uaubucu(setting, a, b, c),
        "lemma_s6_trace_product": closed_form_trace_product(setting, a, b, c, d_op),
        "corollary_s4_state_mean": subspace_state_mean(setting, a),
        "corollary_s6_state_second": subspace_state_second_moment(setting, a),
    }
    rng = cell_stream(config.seed, cell_index, 0)
    return mc_moments(setting, integrands, config.n_samples, rng, closed,
                      threads=threads)


def run_verify_haar(config: ExperimentConfig, threads: int = 1) -> RunResult:
    """First and second block-unitary moments against their closed forms for
    each (dim, d_sub) setting, and exact full-space reductions at P = I."""
    cells = []
    for dim in config.dims:
        subs = config.subspace_dims if config.subspace_dims is not None \
            else tuple(range(2, dim + 1))
        for d_sub in subs:
            if 2 <= d_sub <= dim:
                cells.append((dim, d_sub))
    rows: list[tuple] = []
    tallies: dict[str, CheckTally] = {}
    header = ["seed", "stream_first", "stream_last", "dim", "d_sub", "check",
              "entries", "violations_3se", "max_abs_z", "ok"]
    for cell_index, (dim, d_sub) in enumerate(cells):
        results = _setting_cell(config, cell_index, dim, d_sub, threads)
        s_first = cell_stream(config.seed, cell_index, 0).stream_id
        s_last = cell_stream(config.seed, cell_index, config.n_samples - 1).stream_id
        for name, comparison in results.items():
            diff = np.abs(np.asarray(comparison.mc_estimate)
                          - np.asarray(comparison.closed_form))
            z = equality_z(diff, 0.0, comparison.mc_standard_error)
            tally = tallies.setdefault(name, CheckTally(name))
            before = tally.violations_3se
            tally.record(z)
            z_flat = np.atleast_1d(z)
            rows.append((config.seed, s_first, s_last, dim, d_sub, name,
                         int(z_flat.size),
                         int(tally.violations_3se - before),
                         float(np.max(z_flat)) if np.isfinite(np.max(z_flat)) else float("inf"),
                         bool(np.max(z_flat) <= 3.0)))

    # exact P = I reductions of every closed form
    reduction_tally = CheckTally("full_space_reduction")
    for r_index, dim in enumerate(sorted(set(config.dims))):
        aux = lambda k: cell_stream(config.seed, len(cells) + r_index, AUX_LOCAL + k)
        ops = [_ginibre(dim, dim, aux(k).generator()) for k in range(4)]
        a, b, c, d_op = ops
        setting = full_space_setting(dim)
        checks = [
            ("reduction_e_u", float(np.max(np.abs(closed_form_e_u(setting))))),
            ("reduction_uau", float(np.max(np.abs(
                closed_form_uau(setting, a) - _full_space_uau(a))))),
            ("reduction_uaubucu", float(np.max(np.abs(
                closed_form_uaubucu(setting, a, b, c) - _full_space_uaubucu(a, b, c))))),
            ("reduction_trace_product", float(abs(
                closed_form_trace_product(setting, a, b, c, d_op)
                - _full_space_trace_product(a, b, c, d_op)))),
        ]
        for name, err in checks:
            ok = err <= REDUCTION_ATOL
            reduction_tally.record(np.array([0.0 if ok else np.inf]))
            rows.append((config.seed, aux(0).stream_id, aux(3).stream_id, dim, dim,
                         name, 1, 0 if ok else 1, err, ok))

    passed = all(t.passed for t in tallies.values()) and reduction_tally.passed
    summary = {
        "experiment": "verify-haar",
        "config": config.echo(),
        "settings": [{"dim": dim, "d_sub": ds} for dim, ds in cells],
        "checks": {name: t.summary() for name, t in tallies.items()},
        "full_space_reduction": reduction_tally.summary(),
        "passed": passed,
    }
    return RunResult(header, rows, summary, passed=passed)
