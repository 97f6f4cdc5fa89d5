"""Shared experiment plumbing: stream-id layout, run results, anchors.

Stream-id layout (documented in the README): every Monte Carlo cell gets a
64-bit block of stream ids at cell_index * 2^32.  Sample i of a cell uses
local id i; the anchor-parameter draw uses local id 2^31 and auxiliary
draws (directions, operators, Hamiltonians) use 2^31 + 1, 2^31 + 2, ...
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuits import ParameterizedCircuit, evaluate
from ..ensembles import RngStream

CELL_STRIDE = 2**32
THETA_LOCAL = 2**31
AUX_LOCAL = 2**31 + 1


@dataclass
class RunResult:
    """Per-row records plus the JSON summary of one experiment run."""

    header: list[str]
    rows: list[tuple]
    summary: dict
    passed: bool | None = None  # None: the experiment has no pass/fail semantics


def cell_stream(seed: int, cell_index: int, local: int) -> RngStream:
    return RngStream(seed, cell_index * CELL_STRIDE + local)


def theta_star(circuit: ParameterizedCircuit, stream: RngStream) -> np.ndarray:
    """Anchor parameters, uniform over [0, 2*pi) per component."""
    return stream.generator().uniform(0.0, 2.0 * np.pi, circuit.m_params)


def anchor_state(circuit: ParameterizedCircuit, params: np.ndarray) -> np.ndarray:
    return evaluate(circuit, params).amplitudes
