"""Deterministic output records and Monte Carlo bookkeeping.

All floats are printed with 17 significant digits, CSV rows use RFC-4180
quoting with LF line endings, and JSON summaries are emitted by a small
recursive writer with sorted keys, so a rerun with the same config and seed
reproduces the output files byte for byte.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


def fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value in output: {x}")
    return "%.17g" % x


def fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (np.floating, float)):
        return fmt_float(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def csv_text(header: list[str], rows: list[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_cell(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    parts: list[str] = []
    _write_json(obj, parts)
    return "".join(parts) + "\n"


def _write_json(obj, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (np.integer, int)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (np.floating, float)):
        parts.append(fmt_float(float(obj)))
    elif isinstance(obj, str):
        import json as _json
        parts.append(_json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _write_json(obj.tolist(), parts)
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(", ")
            _write_json(item, parts)
        parts.append("]")
    elif isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                parts.append(", ")
            _write_json(str(key), parts)
            parts.append(": ")
            _write_json(obj[key], parts)
        parts.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= successes <= n:
        raise ValueError("successes must be in [0, n]")
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def proportion_se(successes: int, n: int) -> float:
    phat = successes / n
    return math.sqrt(phat * (1.0 - phat) / n)


def thread_map(fn, items, threads: int) -> list:
    """Ordered map; results are independent of the worker count."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


class PowerSums:
    """Streaming raw power sums (orders 1..4) per entry of a fixed shape.

    Provides the sample mean and variance plus their standard errors; the
    variance SE uses the fourth-central-moment formula
    Var(s^2) ~= (m4 - m2^2 (n-3)/(n-1)) / n.
    """

    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape
        self.n = 0
        self._s = [np.zeros(shape) for _ in range(4)]

    def add(self, batch: np.ndarray) -> None:
        batch = np.asarray(batch, dtype=float)
        if batch.shape[1:] != self.shape:
            raise ValueError(f"batch shape {batch.shape[1:]} != {self.shape}")
        self.n += batch.shape[0]
        power = batch
        self._s[0] += power.sum(axis=0)
        for k in range(1, 4):
            power = power * batch
            self._s[k] += power.sum(axis=0)

    def merge(self, other: "PowerSums") -> None:
        if other.shape != self.shape:
            raise ValueError("shape mismatch in merge")
        self.n += other.n
        for k in range(4):
            self._s[k] += other._s[k]

    @property
    def mean(self) -> np.ndarray:
        return self._s[0] / self.n

    def central_moments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        m = self.mean
        m2 = self._s[1] / n - m**2
        m3 = self._s[2] / n - 3 * m * self._s[1] / n + 2 * m**3
        m4 = (self._s[3] / n - 4 * m * self._s[2] / n
              + 6 * m**2 * self._s[1] / n - 3 * m**4)
        return np.maximum(m2, 0.0), m3, np.maximum(m4, 0.0)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased sample variance."""
        m2, _, _ = self.central_moments()
        return m2 * self.n / max(self.n - 1, 1)

    @property
    def se_mean(self) -> np.ndarray:
        return np.sqrt(self.variance / self.n)

    @property
    def se_variance(self) -> np.ndarray:
        n = self.n
        m2, _, m4 = self.central_moments()
        inner = np.maximum(m4 - m2 * m2 * (n - 3) / max(n - 1, 1), 0.0)
        return np.sqrt(inner / n)


@dataclass
class CheckTally:
    """Entry-level tally of a statistical check family."""

    name: str
    entries: int = 0
    violations_3se: int = 0
    max_abs_z: float = 0.0

    def record(self, z: np.ndarray) -> None:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        self.entries += z.size
        self.violations_3se += int(np.sum(np.abs(z) > 3.0))
        if z.size:
            self.max_abs_z = max(self.max_abs_z, float(np.max(np.abs(z))))

    @property
    def passed(self) -> bool:
        """At most 1% of entries beyond 3 SE and none beyond 6 SE."""
        allowed = math.ceil(0.01 * self.entries)
        return self.violations_3se <= allowed and self.max_abs_z <= 6.0

    def summary(self) -> dict:
        return {
            "entries": self.entries,
            "violations_3se": self.violations_3se,
            "max_abs_z": self.max_abs_z,
            "passed": self.passed,
        }


def equality_z(mc, reference, se, atol: float = 1e-12) -> np.ndarray:
    """Deviation in SE units.  Deviations within `atol` count as exact
    agreement (z = 0) so degenerate cells with vanishing SE stay stable."""
    mc = np.asarray(mc, dtype=float)
    reference = np.asarray(reference, dtype=float)
    se = np.asarray(se, dtype=float)
    diff = np.abs(mc - reference)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(diff <= atol, 0.0,
                     np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.inf))
    return z


def one_sided_z(mc, bound, se, atol: float = 1e-12) -> np.ndarray:
    """Positive values measure how far mc exceeds the bound, in SE units."""
    mc = np.asarray(mc, dtype=float)
    bound = np.asarray(bound, dtype=float)
    se = np.asarray(se, dtype=float)
    excess = mc - bound
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, excess / np.where(se > 0, se, 1.0),
                     np.where(excess <= atol, 0.0, np.inf))
    return np.maximum(z, 0.0)
