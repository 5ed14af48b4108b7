"""Closed-form success and error estimates for the recursive preparation.

Every function is generic over the numeric type of ``p``: passing a
``fractions.Fraction`` gives exact rational results, which the tests use to
compare against exhaustive fault enumeration without tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .noise import NoiseParams
from .polar import Q1Code, k_min


@dataclass(frozen=True)
class ChannelProbs:
    """Per-qubit X, Y and Z error probabilities (upper bounds, see ``bound``).

    Each entry bounds a marginal, so at large ``p`` their sum can exceed 1.
    """

    p_x: float
    p_y: float
    p_z: float
    bound: bool = True

    def __post_init__(self):
        for v in (self.p_x, self.p_y, self.p_z):
            if not 0 <= v <= 1:
                raise ValueError("channel probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class ComponentTerm:
    kind: str
    level: int
    count: int
    p_c: float


@dataclass(frozen=True)
class AnalyticReport:
    i: int
    j: int
    p_pre: float
    p1: float
    p2: float
    breakdown: tuple[ComponentTerm, ...] = field(default=())

    @property
    def p_success(self):
        return self.p1 * self.p2


def _p(params):
    return params.p if isinstance(params, NoiseParams) else params


def _check_levels(i, j, bits):
    if not 0 <= i < j <= len(bits):
        raise ValueError(f"need 0 <= i < j <= {len(bits)}, got i={i}, j={j}")


def cnot_coefficient(k: int, i: int, j: int, bits) -> Fraction:
    """Fraction of the 15 CNOT Paulis at level ``k`` of ``B_{i->j}`` that are rough."""
    _check_levels(i, j, bits)
    if not i < k <= j:
        raise ValueError(f"level {k} outside ({i}, {j}]")
    if k == j:
        return Fraction(8, 15)
    km = k_min(i, j, bits)
    if km is not None and k >= km:
        return Fraction(12, 15)
    return Fraction(14, 15)


def data_init_coefficient(j: int, bits, degenerate: bool = False) -> Fraction:
    # in the degenerate X state the data start in |+> and every level measures XX,
    # so an initial Z always flips an outcome
    if degenerate or sum(bits[:j]) != 0:
        return Fraction(1)
    return Fraction(0)


def rough_prob_component(kind: str, k: int, i: int, j: int, bits, params, degenerate: bool = False):
    """Rough-error probability ``p_C`` of one component of ``B_{i->j}``.

    Parameters
    ----------
    kind : {'data_init', 'ancilla', 'cnot'}
        ``'ancilla'`` covers both ancilla preparation and ancilla readout.
    k : int
        Recursion level of the component (ignored for ``data_init``).
    """
    p = _p(params)
    _check_levels(i, j, bits)
    if kind == "data_init":
        if i != 0:
            raise ValueError("data initialisation only belongs to blocks starting at level 0")
        return data_init_coefficient(j, bits, degenerate) * p
    if not i < k <= j:
        raise ValueError(f"level {k} outside ({i}, {j}]")
    if kind == "ancilla":
        return p
    if kind == "cnot":
        return cnot_coefficient(k, i, j, bits) * p
    raise ValueError(f"unknown component kind {kind!r}")


def smooth_channel_accumulated(i: int, bits, params, degenerate: bool = False) -> ChannelProbs:
    """Per-qubit Pauli channel left on the output of ``B_{0->i}`` by smooth errors."""
    p = _p(params)
    if not 0 <= i <= len(bits):
        raise ValueError(f"level {i} outside [0, {len(bits)}]")
    zero = p * 0
    if i == 0:
        if degenerate:
            return ChannelProbs(zero, zero, zero)
        return ChannelProbs(p, zero, zero)
    c = 2 * Fraction(1, 15) * p
    one = zero + 1
    km = k_min(0, i, bits)
    run = (i - (i if km is None else km)) + 1
    b_i = bits[i - 1]
    if sum(bits[:i]) == 0:
        # all XX so far; in the degenerate case the data carry no initial X
        p_x = 1 - (one if degenerate else 1 - p) * (1 - c) ** i
    elif b_i == 0:
        p_x = 1 - (1 - c) ** run
    else:
        p_x = c
    p_z = c if b_i == 0 else 1 - (1 - c) ** run
    return ChannelProbs(p_x, c, p_z)


def p_pre(i: int, j: int, bits, params, degenerate: bool = False):
    """Probability that an error inherited from ``B_{0->i}`` is rough in ``B_{i->j}``."""
    _check_levels(i, j, bits)
    ch = smooth_channel_accumulated(i, bits, params, degenerate)
    if i == 0:
        return _p(params) * 0
    ones = sum(bits[i:j])
    if ones == 0:
        pre = ch.p_y + ch.p_z
    elif ones == j - i:
        pre = ch.p_x + ch.p_y
    else:
        pre = ch.p_x + ch.p_y + ch.p_z
    # a sum of marginal bounds; only matters at large p
    return min(pre, pre * 0 + 1)


def component_terms(i: int, j: int, bits, params, degenerate: bool = False) -> tuple[ComponentTerm, ...]:
    _check_levels(i, j, bits)
    p = _p(params)
    anc = 1 << (j - 1)
    terms = []
    if i == 0:
        terms.append(ComponentTerm("data_init", 0, 1 << j, rough_prob_component("data_init", 0, i, j, bits, p, degenerate)))
    for k in range(i + 1, j + 1):
        terms.append(ComponentTerm("ancilla", k, 2 * anc, p))
        terms.append(ComponentTerm("cnot", k, 2 * anc, cnot_coefficient(k, i, j, bits) * p))
    return tuple(terms)


def block_success_prob(i: int, j: int, bits, params, degenerate: bool = False) -> AnalyticReport:
    """Approximate acceptance probability of ``B_{i->j}`` as ``p1 * p2``."""
    pre = p_pre(i, j, bits, params, degenerate)
    p1 = (1 - pre) ** (1 << j)
    terms = component_terms(i, j, bits, params, degenerate)
    p2 = 1 + _p(params) * 0
    for t in terms:
        p2 = p2 * (1 - t.p_c) ** t.count
    return AnalyticReport(i, j, pre, p1, p2, terms)


def first_order_loss(i: int, j: int, bits, degenerate: bool = False) -> Fraction:
    """``-d/dp`` of the success estimate at ``p = 0``, as an exact fraction."""
    unit = Fraction(1)
    terms = component_terms(i, j, bits, unit, degenerate)
    loss = sum((Fraction(t.p_c) * t.count for t in terms), Fraction(0))
    if i > 0:
        # p_pre is a polynomial in p with no constant term and slope in (1/15)Z
        eps = Fraction(1, 10**40)
        slope = p_pre(i, j, bits, eps, degenerate) / eps
        loss += (1 << j) * Fraction(round(slope * 15), 15)
    return loss


def _levels(sched) -> tuple[int, ...]:
    return tuple(getattr(sched, "levels", sched))


def factory_rate_analytic(code: Q1Code, sched, params) -> float:
    """Product of block success estimates over consecutive scheduling levels."""
    levels = _levels(sched)
    rate = 1 + _p(params) * 0
    prev = 0
    for lv in levels:
        rate = rate * block_success_prob(prev, lv, code.bits, params, code.degenerate).p_success
        prev = lv
    return rate


def prep_error_probs_analytic(code: Q1Code, params):
    """Per-qubit X-type and Z-type error probabilities of accepted states."""
    ch = smooth_channel_accumulated(code.n, code.bits, params, code.degenerate)
    return ch.p_x + ch.p_y, ch.p_y + ch.p_z
