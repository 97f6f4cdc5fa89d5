"""Experiment configuration: JSON schema, validation, defaults.

Configs are flat JSON objects.  Unknown fields are rejected; error messages
carry the offending field name and, when the field appears in the file, its
line number.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dataclass_fields

EXPERIMENTS = (
    "train", "landscape", "prob-localmin", "lemma1", "prop1",
    "verify-haar", "local-loss",
)

LANDSCAPE_MODES = ("per_target", "fixed_target")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_hat: float = 1e-8
    max_iters: int = 500

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ConfigError("field 'optimizer.learning_rate' must be > 0")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"field 'optimizer.{name}' must be in [0, 1)")
        if not self.epsilon_hat > 0:
            raise ConfigError("field 'optimizer.epsilon_hat' must be > 0")
        if not self.max_iters >= 1:
            raise ConfigError("field 'optimizer.max_iters' must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    output_path: str
    n_qubits: tuple[int, ...] = ()
    depth: int = 0
    overlap_p: tuple[float, ...] = ()
    n_samples: int = 0
    eps1: float = 0.05
    eps2: float = 0.05
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    param_subsets: tuple | None = None     # entries: None (all), int k, or index tuple
    landscape_mode: str = "per_target"
    profile_points: int = 81
    profile_half_range: float = 1.0
    n_offsets: int = 20
    dims: tuple[int, ...] = (4, 6, 8)
    subspace_dims: tuple[int, ...] | None = None
    hamiltonian_terms: int = 6

    def echo(self) -> dict:
        """Effective configuration for the JSON summary."""
        out = {}
        for f in dataclass_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, OptimizerConfig):
                v = {g.name: getattr(v, g.name) for g in dataclass_fields(v)}
            elif isinstance(v, tuple):
                v = [list(e) if isinstance(e, tuple) else e for e in v]
            out[f.name] = v
        return out


_REQUIRED = {
    "train": ("n_qubits", "depth", "overlap_p", "n_samples"),
    "landscape": ("n_qubits", "depth", "overlap_p", "n_samples"),
    "prob-localmin": ("n_qubits", "depth", "overlap_p", "n_samples"),
    "lemma1": ("n_qubits", "depth", "overlap_p", "n_samples"),
    "prop1": ("n_qubits", "depth", "overlap_p", "n_samples"),
    "verify-haar": ("n_samples",),
    "local-loss": ("n_qubits", "depth", "n_samples"),
}

_LIST_OK = {"prob-localmin"}  # n_qubits / overlap_p may be swept


def _as_int(name: str, value, lo=None, hi=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field '{name}' must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"field '{name}' must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"field '{name}' must be <= {hi}, got {value}")
    return value


def _as_float(name: str, value, lo=None, hi=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{name}' must be a number, got {value!r}")
    value = float(value)
    if lo is not None and value < lo:
        raise ConfigError(f"field '{name}' must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"field '{name}' must be <= {hi}, got {value}")
    return value


def _int_tuple(name: str, value, allow_list: bool, lo, hi) -> tuple[int, ...]:
    items = value if isinstance(value, list) else [value]
    if isinstance(value, list) and not allow_list:
        raise ConfigError(f"field '{name}' must be a single integer for this experiment")
    if not items:
        raise ConfigError(f"field '{name}' must not be empty")
    return tuple(_as_int(name, v, lo, hi) for v in items)


def _float_tuple(name: str, value, allow_list: bool, lo, hi) -> tuple[float, ...]:
    items = value if isinstance(value, list) else [value]
    if isinstance(value, list) and not allow_list:
        raise ConfigError(f"field '{name}' must be a single number for this experiment")
    if not items:
        raise ConfigError(f"field '{name}' must not be empty")
    return tuple(_as_float(name, v, lo, hi) for v in items)


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a parsed JSON object and apply defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclass_fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown field '{sorted(unknown)[0]}'")

    experiment = data.get("experiment")
    if experiment is None:
        raise ConfigError("missing required field 'experiment'")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"field 'experiment' must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}"
        )
    if "seed" not in data:
        raise ConfigError("missing required field 'seed'")
    for name in _REQUIRED[experiment]:
        if name not in data:
            raise ConfigError(f"missing required field '{name}' for experiment '{experiment}'")

    allow_list = experiment in _LIST_OK
    kw: dict = {
        "experiment": experiment,
        "seed": _as_int("seed", data["seed"], 0, 2**64 - 1),
        "output_path": data.get("output_path", experiment.replace("-", "_")),
    }
    if not isinstance(kw["output_path"], str) or not kw["output_path"]:
        raise ConfigError("field 'output_path' must be a non-empty string")
    if "n_qubits" in data:
        kw["n_qubits"] = _int_tuple("n_qubits", data["n_qubits"], allow_list, 1, 16)
    if "depth" in data:
        kw["depth"] = _as_int("depth", data["depth"], 0, 64)
    if "overlap_p" in data:
        kw["overlap_p"] = _float_tuple("overlap_p", data["overlap_p"], allow_list, 0.0, 1.0)
    if "n_samples" in data:
        kw["n_samples"] = _as_int("n_samples", data["n_samples"], 1, 2**31 - 1)
    for name in ("eps1", "eps2"):
        if name in data:
            kw[name] = _as_float(name, data[name], 0.0)
    if "optimizer" in data:
        opt = data["optimizer"]
        if not isinstance(opt, dict):
            raise ConfigError("field 'optimizer' must be an object")
        opt_known = {f.name for f in dataclass_fields(OptimizerConfig)}
        opt_unknown = set(opt) - opt_known
        if opt_unknown:
            raise ConfigError(f"unknown field 'optimizer.{sorted(opt_unknown)[0]}'")
        cfg = OptimizerConfig(**opt)
        cfg.validate()
        kw["optimizer"] = cfg
    if "param_subsets" in data and data["param_subsets"] is not None:
        subsets = data["param_subsets"]
        if not isinstance(subsets, list) or not subsets:
            raise ConfigError("field 'param_subsets' must be a non-empty list")
        norm = []
        for entry in subsets:
            if entry is None:
                norm.append(None)
            elif isinstance(entry, int) and not isinstance(entry, bool):
                norm.append(_as_int("param_subsets", entry, 1))
            elif isinstance(entry, list):
                norm.append(tuple(_as_int("param_subsets", v, 0) for v in entry))
            else:
                raise ConfigError(
                    "field 'param_subsets' entries must be null, an integer count, "
                    "or a list of parameter indices"
                )
        kw["param_subsets"] = tuple(norm)
    if "landscape_mode" in data:
        if data["landscape_mode"] not in LANDSCAPE_MODES:
            raise ConfigError(
                f"field 'landscape_mode' must be one of {', '.join(LANDSCAPE_MODES)}"
            )
        kw["landscape_mode"] = data["landscape_mode"]
    if "profile_points" in data:
        points = _as_int("profile_points", data["profile_points"], 3, 10001)
        if points % 2 == 0:
            raise ConfigError("field 'profile_points' must be odd so the grid contains t = 0")
        kw["profile_points"] = points
    if "profile_half_range" in data:
        kw["profile_half_range"] = _as_float("profile_half_range", data["profile_half_range"], 1e-9)
    if "n_offsets" in data:
        kw["n_offsets"] = _as_int("n_offsets", data["n_offsets"], 1, 10**6)
    if "dims" in data:
        dims = data["dims"]
        if not isinstance(dims, list) or not dims:
            raise ConfigError("field 'dims' must be a non-empty list of dimensions")
        kw["dims"] = tuple(_as_int("dims", v, 2, 64) for v in dims)
    if "subspace_dims" in data and data["subspace_dims"] is not None:
        sdims = data["subspace_dims"]
        if not isinstance(sdims, list) or not sdims:
            raise ConfigError("field 'subspace_dims' must be a non-empty list")
        kw["subspace_dims"] = tuple(_as_int("subspace_dims", v, 2, 64) for v in sdims)
    if "hamiltonian_terms" in data:
        kw["hamiltonian_terms"] = _as_int("hamiltonian_terms", data["hamiltonian_terms"], 1, 1000)
    return ExperimentConfig(**kw)


def _field_line(text: str, message: str) -> str:
    """Prefix the message with the 1-based line of the named field, if found."""
    import re

    match = re.search(r"(?:field|unknown field) '([\w.]+)'", message)
    if not match:
        return message
    name = match.group(1).split(".")[-1]
    for lineno, line in enumerate(text.splitlines(), start=1):
        if f'"{name}"' in line:
            return f"line {lineno}: {message}"
    return message


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a config file; raises ConfigError with location info."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {_field_line(text, str(exc))}") from exc
