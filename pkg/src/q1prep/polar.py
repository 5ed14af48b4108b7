"""Classical polar-transform arithmetic and Q1 code bookkeeping.

Positions are 1-based in the public API (``i``, ``i_n``, levels ``k``) and
0-based in every array.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def log2_exact(n: int) -> int:
    if not is_power_of_two(n):
        raise ValueError(f"length must be a power of two, got {n}")
    return n.bit_length() - 1


def polar_transform(u, axis: int = -1) -> np.ndarray:
    """Apply ``P_N = [[1, 1], [0, 1]]^{(x) n}`` over GF(2) along ``axis``.

    Works on stacked vectors; the butterfly costs ``O(N log N)`` per vector.
    """
    a = np.array(u, dtype=np.uint8, copy=True)
    a = np.moveaxis(a, axis, -1)
    length = a.shape[-1]
    log2_exact(length)
    lead = a.shape[:-1]
    h = 1
    while h < length:
        v = a.reshape(*lead, length // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return np.moveaxis(a, -1, axis)


def polar_transform_t(u, axis: int = -1) -> np.ndarray:
    """Apply the transpose ``P_N^T`` (the action of the transform in the X basis)."""
    a = np.array(u, dtype=np.uint8, copy=True)
    a = np.moveaxis(a, axis, -1)
    length = a.shape[-1]
    log2_exact(length)
    lead = a.shape[:-1]
    h = 1
    while h < length:
        v = a.reshape(*lead, length // (2 * h), 2, h)
        v[..., 1, :] ^= v[..., 0, :]
        h *= 2
    return np.moveaxis(a, -1, axis)


def recursion_bits(i_n: int, n: int) -> tuple[int, ...]:
    """Binary expansion ``b_1..b_n`` of ``i_n - 1``, least significant first.

    ``i_n = 0`` (logical X state at ``i = 1``) maps to the all-zero string.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if i_n == 0:
        return (0,) * n
    if not 0 <= i_n - 1 < 2**n:
        raise ValueError(f"i_n - 1 = {i_n - 1} outside [0, 2^{n})")
    return tuple(((i_n - 1) >> k) & 1 for k in range(n))


def bits_to_frozen_length(bits) -> int:
    return 1 + sum(int(b) << k for k, b in enumerate(bits))


def k_min(i: int, j: int, bits) -> int | None:
    """Smallest level ``k`` in ``{i+1..j-1}`` after which every level has basis ``b_j``.

    ``bits`` holds ``b_1..b_n`` (``bits[k-1]`` is ``b_k``).  Returns ``None``
    when the candidate set is empty (``j = i + 1``).
    """
    if j <= i:
        raise ValueError(f"need i < j, got i={i}, j={j}")
    if j > len(bits) or i < 0:
        raise ValueError("level range outside the recursion")
    if j == i + 1:
        return None
    k = j - 1
    while k > i + 1 and bits[k - 1] == bits[j - 1]:
        k -= 1
    return k


def detection_syndrome(flips, i_prev: int, basis: str = "Z") -> np.ndarray:
    """Syndrome of the outcome flips of one transversal measurement round.

    For ``Z`` (ZZ measurements) this is ``P(flips)`` on the Z-frozen indices
    ``1..i_prev``.  For ``X`` (XX measurements) the check runs over the
    X-frozen indices ``i_prev+1..K/2`` using ``P^T``.  Stacked input is
    accepted along the last axis.
    """
    flips = np.asarray(flips, dtype=np.uint8)
    half = flips.shape[-1]
    if not 0 <= i_prev <= half:
        raise ValueError(f"i_prev={i_prev} outside [0, {half}]")
    if basis == "Z":
        return polar_transform(flips)[..., :i_prev]
    if basis == "X":
        return polar_transform_t(flips)[..., i_prev:]
    raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")


def component_count(N: int) -> int:
    n = log2_exact(N)
    return N * (1 + 2 * n)


@dataclass(frozen=True)
class Q1Code:
    """A Q1 code ``Q1(N, i)`` together with the logical basis being prepared."""

    n: int
    i: int
    basis: str = "Z"

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.basis not in ("Z", "X"):
            raise ValueError(f"basis must be 'Z' or 'X', got {self.basis!r}")
        if not 1 <= self.i <= self.N:
            raise ValueError(f"information position {self.i} outside [1, {self.N}]")

    @classmethod
    def from_length(cls, N: int, i: int, basis: str = "Z") -> "Q1Code":
        return cls(log2_exact(N), i, basis)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def i_n(self) -> int:
        return self.i if self.basis == "Z" else self.i - 1

    @cached_property
    def bits(self) -> tuple[int, ...]:
        return recursion_bits(self.i_n, self.n)

    @property
    def degenerate(self) -> bool:
        # logical X at i = 1: every position is X-frozen
        return self.i_n == 0

    def frozen_length(self, k: int) -> int:
        """``i(k)``, the Z-frozen length after recursion level ``k``."""
        if not 0 <= k <= self.n:
            raise ValueError(f"level {k} outside [0, {self.n}]")
        if self.degenerate:
            return 0
        return bits_to_frozen_length(self.bits[:k])

    def block(self, i: int, j: int) -> "BlockSpec":
        from .prep import BlockSpec

        return BlockSpec.for_code(self, i, j)


def coset_min_weight(err, code: Q1Code, kind: str) -> np.ndarray:
    """Minimum Hamming weight of ``err + s`` over the X- or Z-stabilizers ``s`` of ``code``.

    The stabilizer group of a length-``2^k`` intermediate state splits over
    its two halves: for the pair-measured type it is ``{(a, a + s)}`` with
    ``a`` arbitrary, for the other type ``{(s, s)}``, where ``s`` ranges over
    the group one level down.  Both cases reduce to a weighted problem on
    one half, so the exact minimum costs ``O(N log N)`` per vector.

    Parameters
    ----------
    err : array_like, shape (..., N)
        X-error bits (``kind='X'``) or Z-error bits (``kind='Z'``).
    kind : {'X', 'Z'}

    Returns
    -------
    ndarray of int, shape (...)
    """
    if kind not in ("X", "Z"):
        raise ValueError(f"kind must be 'X' or 'Z', got {kind!r}")
    e = np.asarray(err, dtype=np.uint8)
    if e.shape[-1] != code.N:
        raise ValueError(f"expected length {code.N}, got {e.shape[-1]}")
    lead = e.shape[:-1]
    e = e.reshape(-1, code.N).astype(np.int64)
    w = np.ones_like(e)
    cost = np.zeros(e.shape[0], dtype=np.int64)
    pair_bit = 1 if kind == "Z" else 0
    for k in range(code.n, 0, -1):
        M = 1 << (k - 1)
        lo, up = e[:, :M], e[:, M:]
        wl, wu = w[:, :M], w[:, M:]
        if code.bits[k - 1] == pair_bit:
            e = lo ^ up
            w = np.minimum(wl, wu)
        else:
            same = lo == up
            cost += np.where(same, 0, np.minimum(wl, wu)).sum(axis=1)
            e = np.where(same | (wl >= wu), lo, up)
            w = np.where(same, wl + wu, np.abs(wl - wu))
    # a length-1 state is |0> (Z-stabilized) unless the code is degenerate
    free = (kind == "Z") != code.degenerate
    if not free:
        cost += (w * e).sum(axis=1)
    return cost.reshape(lead)
