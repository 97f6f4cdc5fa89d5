"""Monte Carlo verification of the closed-form landscape statistics: the
gradient/Hessian moment formulas, the pointwise loss expectation/variance,
the single-axis profile, and the local-loss (energy) analogues.
"""
from __future__ import annotations

import numpy as np

from .. import theory
from ..circuits import (
    GeneratorSpec,
    ParamGate,
    ParameterizedCircuit,
    FixedGate,
    build_alt,
    evaluate_many,
    rotation,
)
from ..derivatives import (
    iter_fidelity_derivatives,
    iter_local_loss_derivatives,
    min_eigenvalue,
    qfi,
)
from ..ensembles import (
    EnsembleSpec,
    RngStream,
    haar_state,
    sample_block_unitary,
    sample_target,
)
from ..statevector import PauliString
from .common import AUX_LOCAL, THETA_LOCAL, RunResult, anchor_state, cell_stream, theta_star
from .config import ExperimentConfig
from .records import CheckTally, PowerSums, equality_z, one_sided_z, proportion_se, wilson_interval

ROW_HEADER = ["seed", "stream_first", "stream_last", "quantity", "mu", "nu",
              "reference", "mc", "se", "z", "ok"]


def _entry_rows(rows, seed, s_first, s_last, quantity, mu_idx, nu_idx,
                reference, mc, se, z):
    for args in zip(mu_idx, nu_idx, reference, mc, se, z):
        mu, nu, ref, val, err, zval = args
        rows.append((seed, s_first, s_last, quantity, int(mu), int(nu),
                     float(ref), float(val), float(err),
                     float(zval) if np.isfinite(zval) else float("inf"),
                     bool(zval <= 3.0)))


def run_lemma1_check(config: ExperimentConfig, threads: int = 1) -> RunResult:
    """Sample the target ensemble and compare gradient/Hessian moments with
    their closed forms: zero mean gradient, variance f1 * F_mumu, mean
    Hessian (dp^2-1)/(d-1) F, and the f2 entrywise variance bound.  Also
    checks the one-sided Chebyshev tail for each gradient component."""
    n, depth, p = config.n_qubits[0], config.depth, config.overlap_p[0]
    d = 2**n
    circuit = build_alt(n, depth)
    m = circuit.m_params
    theta0 = theta_star(circuit, cell_stream(config.seed, 0, THETA_LOCAL))
    psi_star = anchor_state(circuit, theta0)
    spec = EnsembleSpec(psi_star, p, config.seed)
    fisher = qfi(circuit, theta0)
    omega = circuit.generator_norms()

    targets = np.empty((d, config.n_samples), dtype=complex)
    for i in range(config.n_samples):
        targets[:, i] = sample_target(spec, cell_stream(config.seed, 0, i))

    grad_sums = PowerSums((m,))
    hess_sums = PowerSums((m, m))
    exceed = np.zeros(m, dtype=int)
    for _, grads, hessians in iter_fidelity_derivatives(circuit, theta0, targets):
        grad_sums.add(grads)
        hess_sums.add(hessians)
        exceed += np.sum(np.abs(grads) > config.eps1, axis=0)

    n_s = config.n_samples
    s_first = cell_stream(config.seed, 0, 0).stream_id
    s_last = cell_stream(config.seed, 0, n_s - 1).stream_id
    rows: list[tuple] = []
    tallies = {name: CheckTally(name) for name in
               ("grad_mean", "grad_var", "hess_mean", "hess_var_bound",
                "grad_exceed_chebyshev")}
    mu_idx = np.arange(m)

    z = equality_z(grad_sums.mean, 0.0, grad_sums.se_mean)
    tallies["grad_mean"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "grad_mean", mu_idx, mu_idx,
                np.zeros(m), grad_sums.mean, grad_sums.se_mean, z)

    var_ref = theory.expected_gradient_variance(p, d, np.diag(fisher))
    z = equality_z(grad_sums.variance, var_ref, grad_sums.se_variance)
    tallies["grad_var"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "grad_var", mu_idx, mu_idx,
                var_ref, grad_sums.variance, grad_sums.se_variance, z)

    iu = np.triu_indices(m)
    mean_ref = theory.expected_hessian(p, d, fisher)
    z = equality_z(hess_sums.mean[iu], mean_ref[iu], hess_sums.se_mean[iu])
    tallies["hess_mean"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "hess_mean", iu[0], iu[1],
                mean_ref[iu], hess_sums.mean[iu], hess_sums.se_mean[iu], z)

    var_bound = theory.hessian_variance_bounds(p, d, omega)
    z = one_sided_z(hess_sums.variance[iu], var_bound[iu], hess_sums.se_variance[iu])
    tallies["hess_var_bound"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "hess_var_bound", iu[0], iu[1],
                var_bound[iu], hess_sums.variance[iu], hess_sums.se_variance[iu], z)

    if config.eps1 > 0:
        rate = exceed / n_s
        cheb = var_ref / config.eps1**2
        rate_se = np.sqrt(rate * (1.0 - rate) / n_s)
        z = one_sided_z(rate, cheb, rate_se)
        tallies["grad_exceed_chebyshev"].record(z)
        _entry_rows(rows, config.seed, s_first, s_last, "grad_exceed_chebyshev",
                    mu_idx, mu_idx, cheb, rate, rate_se, z)

    passed = all(t.passed for t in tallies.values())
    summary = {
        "experiment": "lemma1",
        "config": config.echo(),
        "n_qubits": n,
        "overlap_p": p,
        "m_params": m,
        "f1": theory.f1(p, d),
        "f2": theory.f2(p, d),
        "hessian_mean_coefficient": (d * p * p - 1.0) / (d - 1.0),
        "qfi_trace": float(np.trace(fisher)),
        "omega_sq_norm": float(np.sum(omega**2)),
        "checks": {name: t.summary() for name, t in tallies.items()},
        "passed": passed,
    }
    return RunResult(ROW_HEADER, rows, summary, passed=passed)


def axis_check_circuit() -> ParameterizedCircuit:
    """Small circuit whose generators square to the identity (coefficient 1),
    as the single-axis profile formula requires."""
    elements = (
        rotation(2, 0, "Y", 0, coefficient=1.0),
        FixedGate("cz", (0, 1)),
        ParamGate(GeneratorSpec(PauliString(2, "XZ"), 1.0), 1),
        rotation(2, 1, "Y", 2, coefficient=1.0),
        FixedGate("cnot", (1, 0)),
        ParamGate(GeneratorSpec(PauliString(2, "ZX"), 1.0), 3),
    )
    return ParameterizedCircuit(2, elements)


def _axis_profile_rows(seed: int, rows: list[tuple], grid_points: int = 21
                       ) -> tuple[float, bool]:
    """Compare simulated g along each parameter axis with (1/2) F sin^2."""
    circuit = axis_check_circuit()
    stream = cell_stream(seed, 1, AUX_LOCAL)
    theta0 = theta_star(circuit, stream)
    psi0 = anchor_state(circuit, theta0)
    fisher = qfi(circuit, theta0)
    offsets = np.linspace(-np.pi, np.pi, grid_points)
    worst = 0.0
    for mu in range(circuit.m_params):
        thetas = np.repeat(theta0[None, :], grid_points, axis=0)
        thetas[:, mu] += offsets
        states = evaluate_many(circuit, thetas)
        g_sim = 1.0 - np.abs(psi0.conj() @ states) ** 2
        g_ref = np.array([theory.axis_profile(fisher[mu, mu], o) for o in offsets])
        err = float(np.max(np.abs(g_sim - g_ref)))
        worst = max(worst, err)
        rows.append((seed, stream.stream_id, stream.stream_id, "axis_profile",
                     mu, mu, 0.0, err, 0.0, 0.0, err <= 1e-8))
    return worst, worst <= 1e-8


def run_prop1_check(config: ExperimentConfig, threads: int = 1) -> RunResult:
    """Loss mean/variance at perturbed parameter points versus the closed
    forms, plus the coefficient-1 single-axis profile identity."""
    n, depth, p = config.n_qubits[0], config.depth, config.overlap_p[0]
    d = 2**n
    circuit = build_alt(n, depth)
    theta0 = theta_star(circuit, cell_stream(config.seed, 0, THETA_LOCAL))
    psi_star = anchor_state(circuit, theta0)
    spec = EnsembleSpec(psi_star, p, config.seed)

    # offset 0 is the anchor itself; the rest are uniform in [-pi, pi)^M
    n_off = config.n_offsets + 1
    thetas = np.repeat(theta0[None, :], n_off, axis=0)
    offset_streams = [cell_stream(config.seed, 0, AUX_LOCAL + j) for j in range(n_off)]
    for j in range(1, n_off):
        delta = offset_streams[j].generator().uniform(-np.pi, np.pi, circuit.m_params)
        thetas[j] += delta
    states = evaluate_many(circuit, thetas)
    g_values = np.clip(1.0 - np.abs(psi_star.conj() @ states) ** 2, 0.0, 1.0)

    sums = PowerSums((n_off,))
    chunk = max(1, 2**22 // max(n_off, 1))
    for start in range(0, config.n_samples, chunk):
        count = min(chunk, config.n_samples - start)
        phis = np.empty((d, count), dtype=complex)
        for i in range(count):
            phis[:, i] = sample_target(spec, cell_stream(config.seed, 0, start + i))
        losses = 1.0 - np.abs(phis.conj().T @ states) ** 2
        sums.add(losses)

    mean_ref = np.array([theory.landscape_expectation(p, d, g) for g in g_values])
    var_ref = np.array([theory.landscape_variance(p, d, g) for g in g_values])

    rows: list[tuple] = []
    tallies = {name: CheckTally(name) for name in
               ("loss_mean", "loss_var", "anchor_var_zero", "axis_profile")}
    s_first = cell_stream(config.seed, 0, 0).stream_id
    s_last = cell_stream(config.seed, 0, config.n_samples - 1).stream_id
    j_idx = np.arange(n_off)

    z = equality_z(sums.mean, mean_ref, sums.se_mean)
    tallies["loss_mean"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "loss_mean", j_idx, j_idx,
                mean_ref, sums.mean, sums.se_mean, z)

    z = equality_z(sums.variance, var_ref, sums.se_variance)
    tallies["loss_var"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "loss_var", j_idx, j_idx,
                var_ref, sums.variance, sums.se_variance, z)

    anchor_var = float(sums.variance[0])
    anchor_ok = anchor_var <= 1e-12
    tallies["anchor_var_zero"].record(np.array([0.0 if anchor_ok else np.inf]))
    rows.append((config.seed, s_first, s_last, "anchor_var_zero", 0, 0,
                 0.0, anchor_var, 0.0, 0.0, anchor_ok))

    axis_err, axis_ok = _axis_profile_rows(config.seed, rows)
    tallies["axis_profile"].record(np.array([0.0 if axis_ok else np.inf]))

    passed = all(t.passed for t in tallies.values())
    summary = {
        "experiment": "prop1",
        "config": config.echo(),
        "g_values": g_values.tolist(),
        "axis_profile_max_err": axis_err,
        "checks": {name: t.summary() for name, t in tallies.items()},
        "passed": passed,
    }
    return RunResult(ROW_HEADER, rows, summary, passed=passed)


def random_two_local_hamiltonian(n_qubits: int, n_terms: int, stream: RngStream
                                 ) -> np.ndarray:
    """Sum of `n_terms` weight<=2 Pauli strings with uniform coefficients."""
    gen = stream.generator()
    d = 2**n_qubits
    h = np.zeros((d, d), dtype=complex)
    for _ in range(n_terms):
        letters = ["I"] * n_qubits
        if n_qubits == 1:
            support = [0]
        else:
            support = sorted(gen.choice(n_qubits, size=2, replace=False).tolist())
        for q in support:
            letters[q] = "XYZ"[gen.integers(0, 3)]
        coeff = gen.uniform(-1.0, 1.0)
        h += coeff * PauliString(n_qubits, "".join(letters)).to_matrix()
    return h


def run_local_loss_check(config: ExperimentConfig, threads: int = 1) -> RunResult:
    """Local-loss (energy) analogue of the moment checks over the ensemble of
    block unitaries fixing the anchor state, plus the projector-Hamiltonian
    reduction identities and the local-loss probability bound."""
    n, depth = config.n_qubits[0], config.depth
    if n < 2:
        raise ValueError("local-loss checks need at least 2 qubits (d >= 4)")
    d = 2**n
    circuit = build_alt(n, depth)
    m = circuit.m_params
    theta0 = theta_star(circuit, cell_stream(config.seed, 0, THETA_LOCAL))
    psi_star = anchor_state(circuit, theta0)
    hamiltonian = random_two_local_hamiltonian(
        n, config.hamiltonian_terms, cell_stream(config.seed, 0, AUX_LOCAL))
    stats = theory.LocalLossStats.from_hamiltonian(hamiltonian, psi_star)
    f1_h = theory.local_loss_f1(stats)
    f2_h = theory.local_loss_f2(stats)
    loss_star = stats.h_mean
    fisher = qfi(circuit, theta0)
    omega = circuit.generator_norms()
    omega_sq = float(np.sum(omega**2))
    e_star = max(min_eigenvalue(fisher), 0.0)

    grad_sums = PowerSums((m,))
    hess_sums = PowerSums((m, m))
    n_s = config.n_samples
    n_localmin = 0
    chunk = max(8, 2**24 // (16 * d * d))
    for start in range(0, n_s, chunk):
        count = min(chunk, n_s - start)
        vs = np.empty((count, d, d), dtype=complex)
        for i in range(count):
            vs[i] = sample_block_unitary(psi_star,
                                         cell_stream(config.seed, 0, start + i))
        for _, grads, hessians in iter_local_loss_derivatives(
                circuit, theta0, hamiltonian, vs):
            grad_sums.add(grads)
            hess_sums.add(hessians)
            for k in range(grads.shape[0]):
                if np.max(np.abs(grads[k])) <= config.eps1 and \
                        min_eigenvalue(hessians[k]) > -config.eps2:
                    n_localmin += 1

    rows: list[tuple] = []
    tallies = {name: CheckTally(name) for name in
               ("grad_mean", "grad_var", "hess_mean", "hess_var_bound")}
    s_first = cell_stream(config.seed, 0, 0).stream_id
    s_last = cell_stream(config.seed, 0, n_s - 1).stream_id
    mu_idx = np.arange(m)

    z = equality_z(grad_sums.mean, 0.0, grad_sums.se_mean)
    tallies["grad_mean"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "grad_mean", mu_idx, mu_idx,
                np.zeros(m), grad_sums.mean, grad_sums.se_mean, z)

    var_ref = f1_h * np.diag(fisher)
    z = equality_z(grad_sums.variance, var_ref, grad_sums.se_variance)
    tallies["grad_var"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "grad_var", mu_idx, mu_idx,
                var_ref, grad_sums.variance, grad_sums.se_variance, z)

    iu = np.triu_indices(m)
    mean_ref = theory.local_loss_expected_hessian(stats.hamiltonian_trace,
                                                  loss_star, d, fisher)
    z = equality_z(hess_sums.mean[iu], mean_ref[iu], hess_sums.se_mean[iu])
    tallies["hess_mean"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "hess_mean", iu[0], iu[1],
                mean_ref[iu], hess_sums.mean[iu], hess_sums.se_mean[iu], z)

    var_bound = f2_h * np.outer(omega**2, omega**2)
    z = one_sided_z(hess_sums.variance[iu], var_bound[iu], hess_sums.se_variance[iu])
    tallies["hess_var_bound"].record(z)
    _entry_rows(rows, config.seed, s_first, s_last, "hess_var_bound", iu[0], iu[1],
                var_bound[iu], hess_sums.variance[iu], hess_sums.se_variance[iu], z)

    # reduction identities: H = I - |phi><phi| reproduces the fidelity-loss
    # coefficients exactly for f1 and the Hessian mean; f2 is strictly looser.
    red_stream = cell_stream(config.seed, 0, AUX_LOCAL + 1)
    phi = haar_state(d, red_stream)
    h_red = np.eye(d) - np.outer(phi, phi.conj())
    stats_red = theory.LocalLossStats.from_hamiltonian(h_red, psi_star)
    p_red = abs(np.vdot(phi, psi_star))
    f1_err = abs(theory.local_loss_f1(stats_red) - theory.f1(p_red, d))
    coeff_local = (stats_red.hamiltonian_trace - d * stats_red.h_mean) / (d - 1)
    coeff_fid = (d * p_red**2 - 1.0) / (d - 1.0)
    coeff_err = abs(coeff_local - coeff_fid)
    f2_looser = theory.local_loss_f2(stats_red) >= theory.f2(p_red, d) - 1e-12
    reduction_ok = f1_err <= 1e-12 and coeff_err <= 1e-12 and f2_looser
    rows.append((config.seed, red_stream.stream_id, red_stream.stream_id,
                 "reduction_f1", 0, 0, theory.f1(p_red, d),
                 theory.local_loss_f1(stats_red), 0.0, 0.0, f1_err <= 1e-12))
    rows.append((config.seed, red_stream.stream_id, red_stream.stream_id,
                 "reduction_hess_coeff", 0, 0, coeff_fid, coeff_local, 0.0, 0.0,
                 coeff_err <= 1e-12))
    rows.append((config.seed, red_stream.stream_id, red_stream.stream_id,
                 "reduction_f2_looser", 0, 0, theory.f2(p_red, d),
                 theory.local_loss_f2(stats_red), 0.0, 0.0, bool(f2_looser)))

    # probability bound over the block-unitary ensemble
    phat = n_localmin / n_s
    p_not = 1.0 - phat
    se_not = proportion_se(n_s - n_localmin, n_s)
    lo, hi = wilson_interval(n_localmin, n_s)
    bound_summary: dict = {
        "n_localmin": int(n_localmin),
        "pr_localmin": phat,
        "wilson_low": lo,
        "wilson_high": hi,
        "pr_not_localmin": p_not,
        "se_not_localmin": se_not,
    }
    bound_ok = None
    if loss_star < stats.hamiltonian_trace / d and config.eps1 > 0:
        bound = theory.theorem_s9_bound(stats.hamiltonian_trace, loss_star, d,
                                        f1_h, f2_h, omega_sq, e_star,
                                        config.eps1, config.eps2)
        bound_summary["bound_not_localmin"] = bound
        if bound < 1.0:
            bound_ok = p_not <= bound + 3.0 * se_not
        bound_summary["bound_check"] = bound_ok
    else:
        bound_summary["bound_not_localmin"] = None
        bound_summary["bound_check"] = None
        bound_summary["flag"] = "loss above critical value tr(H)/d"

    passed = (all(t.passed for t in tallies.values()) and reduction_ok
              and bound_ok is not False)
    summary = {
        "experiment": "local-loss",
        "config": config.echo(),
        "m_params": m,
        "loss_star": loss_star,
        "hamiltonian_trace": stats.hamiltonian_trace,
        "critical_loss": stats.hamiltonian_trace / d,
        "f1_h": f1_h,
        "f2_h": f2_h,
        "reduction": {
            "f1_abs_err": f1_err,
            "hessian_coefficient_abs_err": coeff_err,
            "f2_looser": bool(f2_looser),
            "overlap_p": p_red,
        },
        "localmin": bound_summary,
        "checks": {name: t.summary() for name, t in tallies.items()},
        "passed": passed,
    }
    return RunResult(ROW_HEADER, rows, summary, passed=passed)
