"""Factory scheduling of many block runs, and Monte-Carlo rate/error estimates.

A chunk of independent factories is simulated together: every stage runs one
batched block call over all groups of all factories in the chunk.  Groups are
formed per factory in survivor order and never straddle two factories.
Chunks are keyed by their index alone, so results do not depend on how many
worker threads execute them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .noise import NoiseParams, RandomFaults, stream
from .polar import Q1Code, coset_min_weight
from .prep import BlockSpec, PauliFrame, run_block_batch

# qubits per chunk at stage 0; fixes the chunk layout independently of threads
CHUNK_QUBITS = 1 << 18


@dataclass(frozen=True)
class SchedulingSet:
    levels: tuple[int, ...]

    def __post_init__(self):
        lv = tuple(int(v) for v in self.levels)
        object.__setattr__(self, "levels", lv)
        if not lv:
            raise ValueError("scheduling set must not be empty")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError(f"scheduling levels must be strictly increasing: {lv}")
        if lv[0] < 1:
            raise ValueError("scheduling levels start at 1")

    @classmethod
    def for_code(cls, levels, n: int) -> "SchedulingSet":
        s = cls(tuple(levels))
        s.validate(n)
        return s

    def validate(self, n: int) -> None:
        if self.levels[-1] != n:
            raise ValueError(f"last scheduling level must be n={n}, got {self.levels[-1]}")

    def stages(self):
        """Consecutive ``(i_k, i_{k+1})`` pairs starting from 0."""
        prev = 0
        for lv in self.levels:
            yield prev, lv
            prev = lv


@dataclass
class FactoryOutcome:
    successes: int
    survivors_per_level: list[int]
    residual_frames: list[PauliFrame]
    aborted: bool


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    trials: int
    factory_size: int
    stderr: float
    successes: int


@dataclass(frozen=True)
class ErrorEstimate:
    """Per-qubit residual error probabilities over accepted states.

    ``p_X`` and ``p_Z`` are ``None`` when no state was accepted.
    """

    p_X: float | None
    p_Z: float | None
    stderr_X: float | None
    stderr_Z: float | None
    successes: int

    @property
    def no_sample(self) -> bool:
        return self.successes == 0


@dataclass
class _ChunkResult:
    factories: int
    successes: np.ndarray
    survivors: np.ndarray
    aborted: np.ndarray
    x: np.ndarray
    z: np.ndarray
    owner: np.ndarray


def _as_sched(sched, n: int) -> SchedulingSet:
    if not isinstance(sched, SchedulingSet):
        sched = SchedulingSet(tuple(sched))
    sched.validate(n)
    return sched


def run_factory_batch(
    code: Q1Code,
    T: int,
    sched: SchedulingSet,
    faults,
    factories: int,
    canonicalize: bool = True,
    absorb_frozen: bool = True,
    skip_clean: bool = False,
) -> _ChunkResult:
    """Run ``factories`` independent factories of size ``T`` sharing one fault source."""
    if T < 1:
        raise ValueError("factory size T must be at least 1")
    sched = _as_sched(sched, code.n)
    n, N, F = code.n, code.N, factories
    x = z = None
    owner = None
    survivors = np.zeros((F, len(sched.levels)), dtype=np.int64)
    aborted = np.zeros(F, dtype=bool)
    counts = None
    for stage, (lo, hi) in enumerate(sched.stages()):
        spec = BlockSpec.for_code(code, lo, hi)
        if lo == 0:
            per_factory = T * (N >> hi)
            blocks = F * per_factory
            owner_blocks = np.repeat(np.arange(F, dtype=np.int64), per_factory)
            inputs = None
        else:
            group = 1 << (hi - lo)
            groups = counts // group
            start = np.cumsum(counts) - counts
            rank = np.arange(owner.size, dtype=np.int64) - start[owner]
            keep = rank < (groups * group)[owner]
            if int(keep.sum()) + int((counts % group).sum()) != owner.size:
                raise AssertionError("survivor bookkeeping mismatch")
            x, z, kept_owner = x[keep], z[keep], owner[keep]
            width = (1 << lo) * group
            blocks = kept_owner.size // group
            inputs = (x.reshape(blocks, width), z.reshape(blocks, width))
            owner_blocks = kept_owner[::group]
        res = run_block_batch(spec, faults, blocks, inputs, canonicalize, absorb_frozen, skip_clean=skip_clean)
        acc = res.accepted
        x, z, owner = res.x[acc], res.z[acc], owner_blocks[acc]
        counts = np.bincount(owner, minlength=F).astype(np.int64)
        survivors[:, stage] = counts
        # too few survivors to ever assemble one full-length state
        short = counts < (1 << (n - hi))
        aborted |= short
        if short.any():
            live = ~short[owner]
            x, z, owner = x[live], z[live], owner[live]
            counts = np.where(short, 0, counts)
    return _ChunkResult(F, counts, survivors, aborted, x, z, owner)


def run_factory(code: Q1Code, T: int, sched, params, rng: np.random.Generator, **kw) -> FactoryOutcome:
    """One factory run with faults drawn from ``rng``."""
    out = run_factory_batch(code, T, sched, RandomFaults(rng, params), 1, **kw)
    frames = [PauliFrame(out.x[r], out.z[r]) for r in range(out.x.shape[0])]
    return FactoryOutcome(int(out.successes[0]), out.survivors[0].tolist(), frames, bool(out.aborted[0]))


def chunk_size(code: Q1Code, T: int) -> int:
    return max(1, CHUNK_QUBITS // (T * code.N))


WEIGHTS = ("min", "canonical", "raw")


def _chunk_stats(code, T, sched, p, seed, key, index, factories, weights, skip_clean):
    rng = stream(seed, *key, index)
    raw = weights == "raw"
    out = run_factory_batch(
        code, T, sched, RandomFaults(rng, p), factories,
        canonicalize=not raw, absorb_frozen=not raw, skip_clean=skip_clean,
    )
    if weights == "min":
        wx = coset_min_weight(out.x, code, "X")
        wz = coset_min_weight(out.z, code, "Z")
    else:
        wx = out.x.sum(axis=1, dtype=np.int64)
        wz = out.z.sum(axis=1, dtype=np.int64)
    return (
        int(out.successes.sum()),
        int(wx.sum()), int(wz.sum()),
        int((wx * wx).sum()), int((wz * wz).sum()),
        int(out.aborted.sum()),
    )


def _run_chunks(code, T, sched, params, R, seed, threads, weights="min", skip_clean=None, key=()):
    if weights not in WEIGHTS:
        raise ValueError(f"weights must be one of {WEIGHTS}, got {weights!r}")
    if R < 1:
        raise ValueError("number of trials R must be at least 1")
    p = params.p if isinstance(params, NoiseParams) else float(params)
    NoiseParams(p)
    sched = _as_sched(sched, code.n)
    if skip_clean is None:
        # worthwhile once most blocks are expected fault free
        skip_clean = p * 4 * code.N * max(1, code.n) < 1.0
    size = chunk_size(code, T)
    jobs = [(c, min(size, R - c * size)) for c in range(math.ceil(R / size))]

    def work(job):
        index, factories = job
        return _chunk_stats(code, T, sched, p, seed, key, index, factories, weights, skip_clean)

    if threads <= 1 or len(jobs) == 1:
        parts = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, jobs))
    return tuple(sum(col) for col in zip(*parts))


def estimate_rate_mc(
    code: Q1Code, T: int, sched, params, R: int, seed: int = 0, threads: int = 1,
    skip_clean=None, key: tuple = (),
) -> RateEstimate:
    """Fraction of attempted copies that come out of ``R`` factories of size ``T``.

    Chunk ``c`` of factories draws from ``stream(seed, *key, c)``.  The
    standard error treats copies as independent Bernoulli trials, which
    ignores the correlation between copies of one factory.
    """
    succ, *_ = _run_chunks(code, T, sched, params, R, seed, threads, skip_clean=skip_clean, key=key)
    total = R * T
    rate = succ / total
    return RateEstimate(rate, R, T, math.sqrt(max(rate * (1 - rate), 0.0) / total), succ)


def estimate_error_probs_mc(
    code: Q1Code, T: int, sched, params, R: int, seed: int = 0, threads: int = 1,
    weights: str = "min", key: tuple = (),
) -> ErrorEstimate:
    """Average residual X and Z weight per qubit over accepted states.

    ``weights`` picks the representative whose weight is counted:
    ``'min'`` is the lightest element of the residual's stabilizer coset,
    ``'canonical'`` the frame as simulated (measured stabilizers moved onto
    the lower qubit, errors on frozen states dropped) and ``'raw'`` the frame
    simulated without either reduction.
    """
    succ, sx, sz, sxx, szz, _ = _run_chunks(code, T, sched, params, R, seed, threads, weights=weights, key=key)
    if succ == 0:
        return ErrorEstimate(None, None, None, None, 0)
    N = code.N

    def se(s, ss):
        if succ < 2:
            return float("nan")
        var = (ss - s * s / succ) / (succ - 1)
        return math.sqrt(max(var, 0.0) / succ) / N

    return ErrorEstimate(sx / (succ * N), sz / (succ * N), se(sx, sxx), se(sz, szz), succ)
