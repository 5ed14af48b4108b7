"""Circuit-level depolarizing faults and the random streams that drive them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Two-qubit Paulis as (data, ancilla) pairs, in the order the noise model lists them.
CNOT_PAULIS: tuple[str, ...] = (
    "IX", "IY", "IZ",
    "XI", "XX", "XY", "XZ",
    "ZI", "ZX", "ZY", "ZZ",
    "YI", "YX", "YY", "YZ",
)

_XBIT = {"I": 0, "X": 1, "Y": 1, "Z": 0}
_ZBIT = {"I": 0, "X": 0, "Y": 1, "Z": 1}

# columns: data x, data z, ancilla x, ancilla z
CNOT_PAULI_BITS = np.array(
    [[_XBIT[p[0]], _ZBIT[p[0]], _XBIT[p[1]], _ZBIT[p[1]]] for p in CNOT_PAULIS],
    dtype=np.uint8,
)


@dataclass(frozen=True)
class NoiseParams:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"physical error rate must lie in [0, 1], got {self.p}")


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``.

    Philox is counter based, so a stream depends only on its key and never on
    which worker consumes it or in what order.
    """
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def sample_init_fault(rng: np.random.Generator, params: NoiseParams, basis: str) -> str | None:
    """Z-basis preparation may leave an X; X-basis preparation may leave a Z."""
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    if rng.random() < params.p:
        return "X" if basis == "Z" else "Z"
    return None


def sample_cnot_fault(rng: np.random.Generator, params: NoiseParams) -> str | None:
    u = rng.random()
    if u < params.p:
        return CNOT_PAULIS[min(int(u / params.p * 15), 14)]
    return None


def sample_meas_fault(rng: np.random.Generator, params: NoiseParams, basis: str) -> bool:
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    return bool(rng.random() < params.p)


def bernoulli_positions(rng: np.random.Generator, count: int, p: float) -> np.ndarray:
    """Sorted indices in ``[0, count)``, each present independently with probability ``p``.

    Sparse rates walk geometric gaps, so the cost scales with the number of
    faults rather than the number of components.
    """
    if count <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(count, dtype=np.int64)
    if p > 0.02:
        return np.flatnonzero(rng.random(count) < p).astype(np.int64)
    mean = count * p
    chunk = int(mean + 6.0 * np.sqrt(mean) + 16)
    pos = np.cumsum(rng.geometric(p, size=chunk)) - 1
    while pos[-1] < count:
        more = np.cumsum(rng.geometric(p, size=chunk)) + pos[-1]
        pos = np.concatenate([pos, more])
    return pos[pos < count].astype(np.int64)


class RandomFaults:
    """Independent faults at rate ``p`` for every component the simulator enumerates."""

    def __init__(self, rng: np.random.Generator, params: NoiseParams | float):
        self.rng = rng
        self.p = params.p if isinstance(params, NoiseParams) else float(params)
        NoiseParams(self.p)

    def sample(self, level: int, t: int, count: int, two_qubit: bool):
        idx = bernoulli_positions(self.rng, count, self.p)
        if two_qubit:
            return idx, self.rng.integers(0, 15, size=idx.size).astype(np.int64)
        return idx, None


@dataclass(frozen=True)
class Fault:
    """A forced fault: ``level`` 0 is data initialisation; ``t`` is the time step 1..4.

    ``index`` is the data qubit (level 0) or the ancilla within its block.
    ``pauli`` indexes :data:`CNOT_PAULIS` for CNOT faults (t = 2, 3).
    """

    level: int
    t: int
    index: int
    pauli: int | None = None

    @property
    def label(self) -> str:
        if self.pauli is not None:
            return CNOT_PAULIS[self.pauli]
        return "flip"


class ScriptedFaults:
    """Exactly the listed faults; ``faults[b]`` applies to batch element ``b``."""

    def __init__(self, faults: list[list[Fault]], per_block: dict[tuple[int, int], int] | None = None):
        self.faults = faults

    def sample(self, level: int, t: int, count: int, two_qubit: bool):
        batch = len(self.faults)
        per = count // batch if batch else 0
        idx, paulis = [], []
        for b, flist in enumerate(self.faults):
            for f in flist:
                if f.level == level and f.t == t:
                    if not 0 <= f.index < per:
                        raise ValueError(f"fault index {f.index} outside [0, {per})")
                    idx.append(b * per + f.index)
                    paulis.append(f.pauli if f.pauli is not None else 0)
        order = np.argsort(idx, kind="stable")
        idx = np.asarray(idx, dtype=np.int64)[order]
        if two_qubit:
            return idx, np.asarray(paulis, dtype=np.int64)[order]
        return idx, None


class NoFaults:
    def sample(self, level: int, t: int, count: int, two_qubit: bool):
        empty = np.empty(0, dtype=np.int64)
        return empty, (empty if two_qubit else None)
