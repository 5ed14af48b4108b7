import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from q1prep.polar import (
    Q1Code,
    bits_to_frozen_length,
    component_count,
    coset_min_weight,
    detection_syndrome,
    is_power_of_two,
    k_min,
    log2_exact,
    polar_transform,
    polar_transform_t,
    recursion_bits,
)

from oracles import brute_coset_min_weight, dense_polar, span, stabilizers


def test_power_of_two_helpers():
    assert [is_power_of_two(v) for v in (0, 1, 2, 3, 4, 6, 8)] == [False, True, True, False, True, False, True]
    assert log2_exact(64) == 6
    with pytest.raises(ValueError):
        log2_exact(12)


def test_transform_small_examples():
    assert polar_transform([0, 0, 0, 0]).tolist() == [0, 0, 0, 0]
    assert polar_transform([1, 0]).tolist() == [1, 0]
    assert polar_transform([0, 1]).tolist() == [1, 1]


@pytest.mark.parametrize("n", range(0, 5))
def test_transform_matches_dense_matrix_exhaustively(n):
    N = 1 << n
    P = dense_polar(N)
    us = np.array(list(itertools.product((0, 1), repeat=N)), dtype=np.uint8)
    assert np.array_equal(polar_transform(us), (us.astype(int) @ P.T) % 2)
    assert np.array_equal(polar_transform_t(us), (us.astype(int) @ P) % 2)
    assert np.array_equal(polar_transform(polar_transform(us)), us)


@settings(max_examples=60, deadline=None)
@given(st.integers(5, 8), st.data())
def test_transform_involution_and_transpose_large(n, data):
    N = 1 << n
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=N, max_size=N)), dtype=np.uint8)
    assert np.array_equal(polar_transform(polar_transform(u)), u)
    # the transpose is the index-reversed transform
    assert np.array_equal(polar_transform_t(u), polar_transform(u[::-1])[::-1])


def test_transform_axis_argument():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, size=(8, 3)).astype(np.uint8)
    assert np.array_equal(polar_transform(a, axis=0), polar_transform(a.T).T)


def test_dense_entries_are_bit_subsets():
    P = dense_polar(16)
    for r in range(16):
        for q in range(16):
            assert P[r, q] == int(r & q == r)


def test_recursion_bits_examples():
    assert recursion_bits(3, 3) == (0, 1, 0)
    assert recursion_bits(1, 3) == (0, 0, 0)
    assert recursion_bits(8, 3) == (1, 1, 1)
    assert recursion_bits(0, 3) == (0, 0, 0)
    with pytest.raises(ValueError):
        recursion_bits(9, 3)


@pytest.mark.parametrize("n", range(0, 11))
def test_recursion_bits_roundtrip(n):
    for bits in itertools.product((0, 1), repeat=n) if n <= 8 else [tuple(np.random.default_rng(n).integers(0, 2, n))]:
        assert recursion_bits(bits_to_frozen_length(bits), n) == tuple(bits)


def test_k_min_examples():
    assert k_min(0, 3, (1, 0, 0)) == 1
    assert k_min(0, 3, (0, 1, 0)) == 2
    assert k_min(0, 1, (0, 1, 0)) is None
    assert k_min(1, 2, (1, 1, 1)) is None


@pytest.mark.parametrize("n", range(2, 9))
def test_k_min_property_exhaustive(n):
    for bits in itertools.product((0, 1), repeat=n):
        for i in range(n):
            for j in range(i + 2, n + 1):
                km = k_min(i, j, bits)
                assert i + 1 <= km <= j - 1
                assert all(bits[k - 1] == bits[j - 1] for k in range(km + 1, j))
                assert km == i + 1 or bits[km - 1] != bits[j - 1]


def test_detection_syndrome_examples():
    assert detection_syndrome([0, 0, 0, 0], 3).tolist() == [0, 0, 0]
    assert detection_syndrome([1, 0, 0, 0], 2).tolist() == [1, 0]


@pytest.mark.parametrize("half", [1, 2, 4, 8, 16])
def test_zero_syndrome_iff_codeword(half):
    """Flip patterns that pass the ZZ check are exactly ``P u`` with ``u`` zero on the first ``i_prev``."""
    P = dense_polar(half)
    flips = np.array(list(itertools.product((0, 1), repeat=half)), dtype=np.uint8)
    for i_prev in range(half + 1):
        passing = {tuple(f) for f in flips[~detection_syndrome(flips, i_prev).any(axis=1)]}
        code = {tuple(c) for c in span(P[:, i_prev:].T)} if i_prev < half else {(0,) * half}
        assert passing == code
        # XX check: zero iff the flips lie in the span of the first i_prev rows of P
        passing_x = {tuple(f) for f in flips[~detection_syndrome(flips, i_prev, "X").any(axis=1)]}
        code_x = {tuple(c) for c in span(P[:i_prev])} if i_prev else {(0,) * half}
        assert passing_x == code_x


def test_component_count():
    assert component_count(1) == 1
    assert component_count(8) == 56
    assert component_count(64) == 832


def test_code_bookkeeping():
    c = Q1Code.from_length(64, 23)
    assert (c.N, c.n, c.i_n) == (64, 6, 23)
    assert c.bits == recursion_bits(23, 6)
    assert c.frozen_length(6) == 23 and c.frozen_length(0) == 1
    x = Q1Code.from_length(8, 1, "X")
    assert x.degenerate and x.bits == (0, 0, 0) and x.frozen_length(3) == 0
    with pytest.raises(ValueError):
        Q1Code.from_length(8, 9)
    with pytest.raises(ValueError):
        Q1Code.from_length(8, 2, "Y")


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_coset_min_weight_matches_brute_force(n):
    N = 1 << n
    rng = np.random.default_rng(n)
    errs = rng.integers(0, 2, size=(40, N)).astype(np.uint8)
    errs[:, :] &= rng.random((40, N)) < 0.3
    for basis in "ZX":
        for i in range(1, N + 1):
            code = Q1Code(n, i, basis)
            xs, zs = stabilizers(N, code.i_n)
            gx, gz = span(xs), span(zs)
            got_x = coset_min_weight(errs, code, "X")
            got_z = coset_min_weight(errs, code, "Z")
            for e, wx, wz in zip(errs, got_x, got_z):
                assert wx == brute_coset_min_weight(e, gx)
                assert wz == brute_coset_min_weight(e, gz)
