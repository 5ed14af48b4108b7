"""Experiment configuration: a YAML mapping validated into :class:`ExperimentConfig`.

Example
-------
::

    code: {N: 64, i: 23, basis: Z}
    p_grid: [1.0e-3, 5.0e-4]
    T_grid: [1, 8, 128]
    sched: [2, 4, 6]
    trials: 1000
    seed: 7
    mapping: default
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

import yaml

from .factory import SchedulingSet
from .logical import MAPPINGS
from .polar import Q1Code, is_power_of_two

MODES = ("rate", "errors", "analytic", "logical", "compare")
METHODS = ("auto", "mc-de", "de-quantized", "bhattacharyya-bound")
WEIGHTS = ("min", "canonical", "raw")
PREP_SOURCES = ("analytic", "mc")

# keys that change how a run executes but never what it outputs
_NOT_HASHED = ("threads", "output", "verbose")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    i: int
    basis: str = "Z"
    p_grid: tuple[float, ...] = (1e-3,)
    T_grid: tuple[int, ...] = (1,)
    sched: tuple[int, ...] | None = None
    trials: int = 1000
    seed: int = 0
    mode: str = "rate"
    mapping: str = "default"
    method: str = "auto"
    samples: int = 100_000
    weights: str = "min"
    prep_source: str = "analytic"
    threads: int = 1
    output: str | None = None
    verbose: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def code(self) -> Q1Code:
        return Q1Code.from_length(self.N, self.i, self.basis)

    @property
    def schedule(self) -> SchedulingSet:
        levels = self.sched if self.sched else (self.code.n,)
        return SchedulingSet.for_code(levels, self.code.n)

    def digest(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k not in _NOT_HASHED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def validate(self) -> "ExperimentConfig":
        if not is_power_of_two(self.N) or self.N < 2:
            raise ConfigError(f"code.N must be a power of two >= 2, got {self.N}")
        if not 1 <= self.i <= self.N:
            raise ConfigError(f"code.i must lie in [1, {self.N}], got {self.i}")
        if self.basis not in ("Z", "X"):
            raise ConfigError(f"code.basis must be Z or X, got {self.basis!r}")
        if not self.p_grid:
            raise ConfigError("p_grid must not be empty")
        if any(not 0.0 <= p <= 1.0 for p in self.p_grid):
            raise ConfigError("p_grid values must lie in [0, 1]")
        if not self.T_grid or any(t < 1 for t in self.T_grid):
            raise ConfigError("T_grid must be non-empty with entries >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.mapping not in MAPPINGS:
            raise ConfigError(f"mapping must be one of {sorted(MAPPINGS)}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.weights not in WEIGHTS:
            raise ConfigError(f"weights must be one of {WEIGHTS}")
        if self.prep_source not in PREP_SOURCES:
            raise ConfigError(f"prep_source must be one of {PREP_SOURCES}")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            self.schedule
        except ValueError as exc:
            raise ConfigError(f"invalid sched: {exc}") from None
        return self


def _floats(v, key):
    if isinstance(v, (int, float)):
        v = [v]
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number or a list of numbers") from None


def _ints(v, key):
    if isinstance(v, int):
        v = [v]
    try:
        out = tuple(int(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer or a list of integers") from None
    if any(float(a) != float(b) for a, b in zip(out, v)):
        raise ConfigError(f"{key} must hold integers")
    return out


def from_mapping(raw: dict, **overrides) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    raw = dict(raw)
    code = raw.pop("code", None)
    if not isinstance(code, dict) or "N" not in code or "i" not in code:
        raise ConfigError("config needs a 'code' section with N and i")
    kw = {"N": int(code["N"]), "i": int(code["i"]), "basis": str(code.get("basis", "Z"))}
    if "p_grid" in raw:
        kw["p_grid"] = _floats(raw.pop("p_grid"), "p_grid")
    if "T_grid" in raw:
        kw["T_grid"] = _ints(raw.pop("T_grid"), "T_grid")
    if "sched" in raw:
        s = raw.pop("sched")
        kw["sched"] = None if s is None else _ints(s, "sched")
    for key, typ in (("trials", int), ("seed", int), ("samples", int), ("threads", int)):
        if key in raw:
            try:
                kw[key] = typ(raw.pop(key))
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be an integer") from None
    for key in ("mode", "mapping", "method", "weights", "prep_source", "output"):
        if key in raw:
            kw[key] = str(raw.pop(key))
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}")
    cfg = ExperimentConfig(**kw)
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()


def load(path: str, **overrides) -> ExperimentConfig:
    """Read and validate a YAML config; ``OSError`` propagates for I/O problems."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return from_mapping(raw, **overrides)
