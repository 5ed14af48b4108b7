"""Pauli-frame simulation of a recursion segment ``B_{i->j}``.

Only error effects are tracked.  Ideal measurement outcomes and frozen values
sit at the all-zero reference, so the verdict and the residual error are
functions of the frame alone.

Layout
------
A block over ``2^j`` data qubits runs levels ``k = i+1..j``.  Level ``k``
pairs qubit ``q`` with ``q + 2^{k-1}`` inside each ``2^k`` sub-block, so a
batch of frames with shape ``(B, 2^j)`` is viewed as ``(B, S, 2, M)`` with
``M = 2^{k-1}`` and ``S = 2^{j-k}``.  The ancilla of pair ``(s, m)`` has
local index ``s*M + m``.  Each level has four time steps: ancilla
preparation (t=1), CNOT with the lower qubit (t=2), CNOT with the upper
qubit (t=3) and ancilla readout (t=4).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .noise import CNOT_PAULI_BITS, CNOT_PAULIS, NoFaults, NoiseParams, RandomFaults
from .polar import Q1Code, detection_syndrome, log2_exact


@dataclass
class PauliFrame:
    """X and Z error indicators over the data qubits; Y sets both."""

    x_err: np.ndarray
    z_err: np.ndarray

    def __post_init__(self):
        self.x_err = np.asarray(self.x_err, dtype=np.uint8).copy()
        self.z_err = np.asarray(self.z_err, dtype=np.uint8).copy()
        if self.x_err.shape != self.z_err.shape or self.x_err.ndim != 1:
            raise ValueError("x_err and z_err must be 1-d and of equal length")

    @classmethod
    def zeros(cls, size: int) -> "PauliFrame":
        return cls(np.zeros(size, np.uint8), np.zeros(size, np.uint8))

    @property
    def size(self) -> int:
        return self.x_err.size

    def copy(self) -> "PauliFrame":
        return PauliFrame(self.x_err, self.z_err)

    def is_trivial(self) -> bool:
        return not (self.x_err.any() or self.z_err.any())

    def __eq__(self, other):
        if not isinstance(other, PauliFrame):
            return NotImplemented
        return np.array_equal(self.x_err, other.x_err) and np.array_equal(self.z_err, other.z_err)

    def __str__(self):
        sym = np.array(["I", "X", "Z", "Y"])
        return "".join(sym[self.x_err + 2 * self.z_err])


@dataclass(frozen=True)
class BlockSpec:
    """Recursion levels ``i+1..j`` of one code.

    ``bits`` holds ``b_{i+1}..b_j`` and ``frozen`` holds ``i(i)..i(j)``.
    """

    i: int
    j: int
    bits: tuple[int, ...]
    frozen: tuple[int, ...]
    init_basis: str = "Z"

    def __post_init__(self):
        if not 0 <= self.i < self.j:
            raise ValueError(f"need 0 <= i < j, got i={self.i}, j={self.j}")
        if len(self.bits) != self.j - self.i or len(self.frozen) != self.j - self.i + 1:
            raise ValueError("bits/frozen lengths do not match the level range")

    @classmethod
    def for_code(cls, code: Q1Code, i: int, j: int) -> "BlockSpec":
        if not 0 <= i < j <= code.n:
            raise ValueError(f"need 0 <= i < j <= {code.n}, got i={i}, j={j}")
        frozen = tuple(code.frozen_length(k) for k in range(i, j + 1))
        return cls(i, j, tuple(code.bits[i:j]), frozen, "X" if code.degenerate else "Z")

    @property
    def includes_data_init(self) -> bool:
        return self.i == 0

    @property
    def data_count(self) -> int:
        return 1 << self.j

    @property
    def ancilla_count(self) -> int:
        """Ancillas (pair measurements) per level."""
        return 1 << (self.j - 1)

    @property
    def input_count(self) -> int:
        return 1 << (self.j - self.i)

    @property
    def measurement_count(self) -> int:
        return (self.j - self.i) * self.ancilla_count

    @property
    def component_count(self) -> int:
        t = self.measurement_count
        return 4 * t + (self.data_count if self.includes_data_init else 0)

    def bit(self, k: int) -> int:
        return self.bits[k - self.i - 1]

    def frozen_length(self, k: int) -> int:
        return self.frozen[k - self.i]

    def level_basis(self, k: int) -> str:
        """``'Z'`` for ZZ measurements, ``'X'`` for XX."""
        return "Z" if self.bit(k) else "X"


@dataclass(frozen=True)
class Success:
    frame: PauliFrame


@dataclass(frozen=True)
class Detected:
    level: int


@dataclass(frozen=True)
class BlockResult:
    verdict: Success | Detected

    @property
    def accepted(self) -> bool:
        return isinstance(self.verdict, Success)


@dataclass
class BlockBatch:
    """Outcome of a batched block run.

    ``detected`` holds the first level with a nonzero syndrome, 0 for
    accepted runs.  ``any_flip`` marks runs where some outcome flipped,
    whether or not the gadget saw it.
    """

    x: np.ndarray
    z: np.ndarray
    detected: np.ndarray
    any_flip: np.ndarray
    first_flip: np.ndarray = field(default=None)

    @property
    def accepted(self) -> np.ndarray:
        return self.detected == 0


def apply_cnot(frame: PauliFrame, control: int, target: int) -> PauliFrame:
    if control == target:
        raise ValueError("control and target must differ")
    for q in (control, target):
        if not 0 <= q < frame.size:
            raise ValueError(f"qubit {q} outside [0, {frame.size})")
    out = frame.copy()
    out.x_err[target] ^= out.x_err[control]
    out.z_err[control] ^= out.z_err[target]
    return out


def _pauli_bits(label: str) -> tuple[int, int]:
    return {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}[label]


def run_pair_measurement(
    frame: PauliFrame,
    q1: int,
    q2: int,
    basis: str,
    rng: np.random.Generator | None = None,
    params: NoiseParams | None = None,
    forced: dict | None = None,
    canonicalize: bool = True,
) -> tuple[PauliFrame, int]:
    """Measure ``ZZ`` (``basis='Z'``) or ``XX`` (``basis='X'``) on ``(q1, q2)`` with a fresh ancilla.

    Faults are either sampled from ``rng``/``params`` or given in ``forced``
    as ``{1: True, 2: 'XZ', 3: 'IX', 4: True}`` keyed by time step; CNOT
    labels act on (data, ancilla).
    """
    from .noise import sample_cnot_fault, sample_init_fault, sample_meas_fault

    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    if q1 == q2:
        raise ValueError("q1 and q2 must differ")
    if forced is None and (rng is None or params is None):
        forced = {}
    fr = frame.copy()
    xs, zs = fr.x_err, fr.z_err
    ax = az = 0

    def fault(t):
        if forced is not None:
            return forced.get(t)
        if t == 1:
            return sample_init_fault(rng, params, "Z" if basis == "Z" else "X")
        if t in (2, 3):
            return sample_cnot_fault(rng, params)
        return sample_meas_fault(rng, params, basis)

    f = fault(1)
    if f:
        if basis == "Z":
            ax ^= 1
        else:
            az ^= 1
    for t, q in ((2, q1), (3, q2)):
        if basis == "Z":
            ax ^= int(xs[q])
            zs[q] ^= az
        else:
            xs[q] ^= ax
            az ^= int(zs[q])
        f = fault(t)
        if f:
            dx, dz = _pauli_bits(f[0])
            bx, bz = _pauli_bits(f[1])
            xs[q] ^= dx
            zs[q] ^= dz
            ax ^= bx
            az ^= bz
    if fault(4):
        if basis == "Z":
            ax ^= 1
        else:
            az ^= 1
    flip = ax if basis == "Z" else az
    if canonicalize:
        if basis == "Z":
            zs[q1] ^= zs[q2]
            zs[q2] = 0
        else:
            xs[q1] ^= xs[q2]
            xs[q2] = 0
    return fr, int(flip)


def _stack_inputs(spec: BlockSpec, inputs, batch: int) -> tuple[np.ndarray, np.ndarray]:
    size = spec.data_count
    if spec.includes_data_init:
        if inputs is not None:
            raise ValueError("a block starting at level 0 initialises its own data qubits")
        return np.zeros((batch, size), np.uint8), np.zeros((batch, size), np.uint8)
    if isinstance(inputs, tuple):
        x, z = inputs
        x = np.array(x, dtype=np.uint8, copy=True)
        z = np.array(z, dtype=np.uint8, copy=True)
        if x.shape != (batch, size) or z.shape != (batch, size):
            raise ValueError(f"expected input arrays of shape {(batch, size)}, got {x.shape}")
        return x, z
    raise ValueError("inputs must be a pair of (B, 2^j) arrays")


def _absorb(spec: BlockSpec, k: int, x: np.ndarray, z: np.ndarray) -> None:
    # a fully Z-frozen state is a computational basis state, so Z errors act
    # trivially; the mirror holds for fully X-frozen states
    length = 1 << k
    frozen = spec.frozen_length(k)
    if frozen == length:
        z[...] = 0
    elif frozen == 0:
        x[...] = 0


class _Replay:
    """Pre-drawn faults replayed on a compacted batch."""

    def __init__(self, table, remap, batch):
        self.table = table
        self.remap = remap
        self.batch = batch

    def sample(self, level, t, count, two_qubit):
        idx, pauli = self.table[(level, t)]
        per = count // self.batch
        elem, local = np.divmod(idx, per)
        return self.remap[elem] * per + local, pauli


def _fault_steps(spec: BlockSpec, batch: int):
    if spec.includes_data_init:
        yield 0, 0, batch * spec.data_count, False
    for k in range(spec.i + 1, spec.j + 1):
        count = batch * spec.ancilla_count
        yield k, 1, count, False
        yield k, 2, count, True
        yield k, 3, count, True
        yield k, 4, count, False


def run_block_batch(
    spec: BlockSpec,
    faults=None,
    batch: int = 1,
    inputs=None,
    canonicalize: bool = True,
    absorb_frozen: bool = True,
    trace: Callable[[str], None] | None = None,
    skip_clean: bool = False,
) -> BlockBatch:
    """Run ``batch`` independent copies of a block.

    Parameters
    ----------
    spec : BlockSpec
        Levels to execute.
    faults : fault source
        Object with ``sample(level, t, count, two_qubit)`` returning sorted
        flat component indices (and Pauli indices for CNOT steps).  ``None``
        runs noiselessly.
    batch : int
        Number of copies ``B``.
    inputs : tuple of arrays, optional
        ``(x, z)`` of shape ``(B, 2^j)`` holding the concatenated input
        frames; required iff ``spec.i > 0``.
    canonicalize : bool
        Move measured-stabilizer components onto the lower qubit of each pair.
    absorb_frozen : bool
        Drop errors that act trivially on fully frozen intermediate states.
    trace : callable, optional
        Receives one text line per component of batch element 0.
    skip_clean : bool
        Draw every fault up front (in the usual order) and simulate only the
        copies that carry a fault or a nonzero input.  The others are accepted
        with a zero frame, so the result is unchanged; this pays off when
        most copies are fault free.

    Returns
    -------
    BlockBatch
    """
    if faults is None:
        faults = NoFaults()
    if batch == 0:
        # every factory in the chunk already aborted
        empty = np.zeros((0, spec.data_count), dtype=np.uint8)
        none = np.zeros(0, dtype=np.int64)
        return BlockBatch(empty, empty.copy(), none, none.astype(bool), none.copy())
    if skip_clean and trace is None:
        return _run_sparse(spec, faults, batch, inputs, canonicalize, absorb_frozen)
    B = batch
    L = spec.data_count
    x, z = _stack_inputs(spec, inputs, B)
    detected = np.zeros(B, dtype=np.int64)
    any_flip = np.zeros(B, dtype=bool)
    first_flip = np.zeros(B, dtype=np.int64)

    if spec.includes_data_init:
        idx, _ = faults.sample(0, 0, B * L, False)
        target = x if spec.init_basis == "Z" else z
        target.reshape(-1)[idx] ^= 1
        if trace is not None:
            hit = set(idx[idx < L].tolist())
            err = "X" if spec.init_basis == "Z" else "Z"
            for q in range(L):
                trace(f"level=0 t=0 data_init{spec.init_basis} q={q} fault={err if q in hit else '-'}")

    for k in range(spec.i + 1, spec.j + 1):
        M = 1 << (k - 1)
        S = L // (2 * M)
        basis = spec.level_basis(k)
        i_prev = spec.frozen_length(k - 1)
        if absorb_frozen:
            _absorb(spec, k - 1, x, z)
        xv = x.reshape(B, S, 2, M)
        zv = z.reshape(B, S, 2, M)
        ax = np.zeros((B, S, M), np.uint8)
        az = np.zeros((B, S, M), np.uint8)
        count = B * S * M
        lines = [] if trace is not None else None

        idx, _ = faults.sample(k, 1, count, False)
        (ax if basis == "Z" else az).reshape(-1)[idx] ^= 1
        if lines is not None:
            _trace_single(lines, k, 1, f"anc_init{'Z' if basis == 'Z' else 'X'}", idx, S * M,
                          "X" if basis == "Z" else "Z")

        for t, half in ((2, 0), (3, 1)):
            dx, dz = xv[:, :, half, :], zv[:, :, half, :]
            if basis == "Z":
                ax ^= dx
                dz ^= az
            else:
                dx ^= ax
                az ^= dz
            idx, pauli = faults.sample(k, t, count, True)
            if idx.size:
                bits = CNOT_PAULI_BITS[pauli]
                b, rem = np.divmod(idx, S * M)
                s, m = np.divmod(rem, M)
                data = b * L + s * (2 * M) + half * M + m
                x.reshape(-1)[data] ^= bits[:, 0]
                z.reshape(-1)[data] ^= bits[:, 1]
                ax.reshape(-1)[idx] ^= bits[:, 2]
                az.reshape(-1)[idx] ^= bits[:, 3]
            if lines is not None:
                _trace_cnot(lines, k, t, basis, idx, pauli, S, M, half)

        idx, _ = faults.sample(k, 4, count, False)
        (ax if basis == "Z" else az).reshape(-1)[idx] ^= 1
        if lines is not None:
            _trace_single(lines, k, 4, f"meas{'Z' if basis == 'Z' else 'X'}", idx, S * M, "flip")
        flips = ax if basis == "Z" else az

        if canonicalize:
            if basis == "Z":
                zv[:, :, 0, :] ^= zv[:, :, 1, :]
                zv[:, :, 1, :] = 0
            else:
                xv[:, :, 0, :] ^= xv[:, :, 1, :]
                xv[:, :, 1, :] = 0

        flipped = flips.reshape(B, -1).any(axis=1)
        first_flip[flipped & ~any_flip] = k
        any_flip |= flipped
        synd = detection_syndrome(flips, i_prev, basis)
        caught = synd.reshape(B, -1).any(axis=1)
        detected[(detected == 0) & caught] = k

        # an outcome flip the gadget does not catch still mis-records the
        # frozen values; relative to the recorded reference it is an error
        # anticommuting with the measured pair operator on the lower qubit
        if basis == "Z":
            xv[:, :, 0, :] ^= flips
        else:
            zv[:, :, 0, :] ^= flips

        if lines is not None:
            for line in lines:
                trace(line)
            trace(
                f"level={k} basis={basis}{basis} i_prev={i_prev} "
                f"flips={''.join(map(str, flips[0].reshape(-1)))} "
                f"syndrome={''.join(map(str, synd[0].reshape(-1)))} "
                f"verdict={'detected' if caught[0] else 'pass'}"
            )

    if absorb_frozen:
        _absorb(spec, spec.j, x, z)
    return BlockBatch(x, z, detected, any_flip, first_flip)


def _run_sparse(spec, faults, batch, inputs, canonicalize, absorb_frozen):
    table = {}
    hit = np.zeros(batch, dtype=bool)
    for level, t, count, two in _fault_steps(spec, batch):
        idx, pauli = faults.sample(level, t, count, two)
        table[(level, t)] = (idx, pauli)
        hit[idx // (count // batch)] = True
    x, z = _stack_inputs(spec, inputs, batch)
    if not spec.includes_data_init:
        hit |= x.any(axis=1) | z.any(axis=1)
    active = np.flatnonzero(hit)
    remap = np.full(batch, -1, dtype=np.int64)
    remap[active] = np.arange(active.size)
    L = spec.data_count
    out = BlockBatch(
        np.zeros((batch, L), np.uint8),
        np.zeros((batch, L), np.uint8),
        np.zeros(batch, dtype=np.int64),
        np.zeros(batch, dtype=bool),
        np.zeros(batch, dtype=np.int64),
    )
    if active.size == 0:
        return out
    sub_inputs = None if spec.includes_data_init else (x[active], z[active])
    sub = run_block_batch(
        spec, _Replay(table, remap, active.size), active.size, sub_inputs, canonicalize, absorb_frozen
    )
    out.x[active] = sub.x
    out.z[active] = sub.z
    out.detected[active] = sub.detected
    out.any_flip[active] = sub.any_flip
    out.first_flip[active] = sub.first_flip
    return out


def _trace_single(lines, k, t, kind, idx, per, err):
    hit = set(idx[idx < per].tolist())
    for a in range(per):
        lines.append(f"level={k} t={t} {kind} anc={a} fault={err if a in hit else '-'}")


def _trace_cnot(lines, k, t, basis, idx, pauli, S, M, half):
    per = S * M
    hit = {}
    if idx.size:
        for a, pi in zip(idx.tolist(), pauli.tolist()):
            if a < per:
                hit[a] = CNOT_PAULIS[pi]
    for a in range(per):
        s, m = divmod(a, M)
        q = s * 2 * M + half * M + m
        pair = f"ctrl=q{q} tgt=a{a}" if basis == "Z" else f"ctrl=a{a} tgt=q{q}"
        lines.append(f"level={k} t={t} cnot {pair} fault={hit.get(a, '-')}")


def run_block(
    spec: BlockSpec,
    inputs: list[PauliFrame] | None,
    rng: np.random.Generator,
    params: NoiseParams,
    trace: Callable[[str], None] | None = None,
) -> BlockResult:
    """Single run of a block on explicit input frames (``None`` when ``i = 0``)."""
    arrays = None
    if spec.includes_data_init:
        if inputs:
            raise ValueError("a block starting at level 0 takes no input frames")
    else:
        if inputs is None or len(inputs) != spec.input_count:
            raise ValueError(f"expected {spec.input_count} input frames")
        width = 1 << spec.i
        if any(f.size != width for f in inputs):
            raise ValueError(f"input frames must cover {width} qubits")
        arrays = (
            np.concatenate([f.x_err for f in inputs])[None, :],
            np.concatenate([f.z_err for f in inputs])[None, :],
        )
    out = run_block_batch(spec, RandomFaults(rng, params), 1, arrays, trace=trace)
    if out.detected[0]:
        return BlockResult(Detected(int(out.detected[0])))
    return BlockResult(Success(PauliFrame(out.x[0], out.z[0])))


def residual_weights(frame) -> tuple[int, int]:
    """Hamming weights of the X and Z parts; Y counts toward both."""
    if isinstance(frame, PauliFrame):
        return int(frame.x_err.sum()), int(frame.z_err.sum())
    x, z = frame
    return np.asarray(x).sum(axis=-1), np.asarray(z).sum(axis=-1)


def stabilizer_generators(code: Q1Code) -> tuple[np.ndarray, np.ndarray]:
    """X-type and Z-type stabilizer generators of the prepared state, as rows.

    X stabilizers are ``P e_q`` for the X-frozen positions and Z stabilizers
    are the Z-frozen rows of ``P``.  Positions are 0-based here.
    """
    from .polar import polar_transform

    eye = np.eye(code.N, dtype=np.uint8)
    P = polar_transform(eye, axis=0)  # column q is P e_q
    x_stab = P[:, code.i_n:].T.copy()
    z_stab = P[: code.i_n, :].copy()
    return x_stab, z_stab


def enumerate_single_faults(spec: BlockSpec):
    """Every single component fault of a block, in component enumeration order.

    Yields :class:`~q1prep.noise.Fault` objects; CNOT faults are expanded
    over the 15 Paulis.
    """
    from .noise import Fault

    if spec.includes_data_init:
        for q in range(spec.data_count):
            yield Fault(0, 0, q)
    per = spec.ancilla_count
    for k in range(spec.i + 1, spec.j + 1):
        for a in range(per):
            yield Fault(k, 1, a)
        for t in (2, 3):
            for a in range(per):
                for pi in range(15):
                    yield Fault(k, t, a, pi)
        for a in range(per):
            yield Fault(k, 4, a)


def run_single_faults(spec: BlockSpec, canonicalize=True, absorb_frozen=True):
    """Run one copy per single fault; returns the fault list and the batch outcome."""
    from .noise import ScriptedFaults

    faults = list(enumerate_single_faults(spec))
    out = run_block_batch(
        spec,
        ScriptedFaults([[f] for f in faults]),
        len(faults),
        canonicalize=canonicalize,
        absorb_frozen=absorb_frozen,
    )
    return faults, out


def classify_single_faults(spec: BlockSpec):
    """Rough/smooth classification of every single fault.

    A fault is rough when it flips some measurement outcome at or after its
    own level.  Otherwise it is smooth if it leaves a nonzero residual and
    trivial if not.  Propagation keeps the measured-stabilizer
    canonicalization but does not drop errors on frozen states, so a Z on a
    computational basis state still counts as a residual.

    Returns
    -------
    list of (Fault, str, (wt_x, wt_z))
    """
    faults, out = run_single_faults(spec, canonicalize=True, absorb_frozen=False)
    wx, wz = residual_weights((out.x, out.z))
    rows = []
    for b, f in enumerate(faults):
        if out.any_flip[b]:
            kind = "rough"
        elif wx[b] or wz[b]:
            kind = "smooth"
        else:
            kind = "trivial"
        rows.append((f, kind, (int(wx[b]), int(wz[b]))))
    return rows
