from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcremez.indexsets import (
    IndexSet,
    dyadic_block,
    dyadic_block_wide,
    hyperbolic_cross,
    hyperbolic_layer,
    in_step_hyperbolic,
    layer_residue_family,
    level,
    pack,
    step_hyperbolic,
    unpack,
)


def brute_cross(N, d):
    r = range(-N, N + 1)
    return {k for k in itertools.product(r, repeat=d) if np.prod([max(1, abs(v)) for v in k]) <= N}


def brute_step(n, d):
    r = range(-(1 << n), (1 << n) + 1)
    out = set()
    for k in itertools.product(r, repeat=d):
        if sum(0 if v == 0 else abs(v).bit_length() for v in k) <= n:
            out.add(k)
    return out


@pytest.mark.parametrize("N,d,size", [(1, 2, 9), (2, 2, 21), (1, 1, 3)])
def test_hyperbolic_cross_sizes(N, d, size):
    assert len(hyperbolic_cross(N, d)) == size


@pytest.mark.parametrize("N,d", [(3, 1), (5, 2), (8, 2), (13, 2), (4, 3)])
def test_hyperbolic_cross_matches_enumeration(N, d):
    assert set(hyperbolic_cross(N, d)) == brute_cross(N, d)


@pytest.mark.parametrize("s,expected", [
    ((0, 0), {(0, 0)}),
    ((1,), {(-1,), (1,)}),
    ((2,), {(-3,), (-2,), (2,), (3,)}),
])
def test_dyadic_block(s, expected):
    assert set(dyadic_block(s)) == expected


def test_dyadic_block_wide():
    shell = [m for m in range(-3, 4) if 1 <= abs(m) < 4]
    assert set(dyadic_block_wide((2, 2))) == set(itertools.product(shell, shell))
    assert set(dyadic_block_wide((0, 0))) == {(0, 0)}
    assert dyadic_block((3, 4)).issubset(dyadic_block_wide((3, 4)))


@pytest.mark.parametrize("n,d,size", [(2, 1, 7), (0, 2, 1), (2, 2, 17)])
def test_step_hyperbolic_sizes(n, d, size):
    assert len(step_hyperbolic(n, d)) == size


@pytest.mark.parametrize("n,d", [(3, 1), (3, 2), (4, 2), (2, 3)])
def test_step_hyperbolic_matches_enumeration(n, d):
    assert set(step_hyperbolic(n, d)) == brute_step(n, d)


def test_layers():
    assert set(hyperbolic_layer(1, 1)) == {(-1,), (1,)}
    assert len(hyperbolic_layer(2, 2)) == 12
    for n in range(1, 7):
        assert len(hyperbolic_layer(n, 2).intersection(step_hyperbolic(n - 1, 2))) == 0


@pytest.mark.parametrize("n,a,b,members", [
    (8, 6, 0, ()),
    (12, 6, 0, ((6, 6),)),
    (13, 6, 1, ((7, 6),)),
    (24, 6, 0, ((6, 18), (12, 12), (18, 6))),
])
def test_residue_family(n, a, b, members):
    fam = layer_residue_family(n, a, b)
    assert tuple(tuple(int(v) for v in s) for s in fam) == members


def test_membership_and_levels():
    Q = step_hyperbolic(4, 2)
    keys = np.array([[0, 0], [3, 3], [4, 4], [15, 0], [16, 0]])
    assert list(in_step_hyperbolic(keys, 4)) == [True, True, False, True, False]
    assert list(Q.contains(keys)) == [True, True, False, True, False]
    assert level([0, 1, 2, 3, 4, -5]).tolist() == [0, 1, 2, 2, 3, 3]


def test_text_round_trip():
    G = hyperbolic_cross(6, 2)
    assert IndexSet.from_text(G.to_text()) == G


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-5000, 5000), st.integers(-5000, 5000)), min_size=1, max_size=40))
def test_pack_round_trip(items):
    keys = np.array(items, dtype=np.int64)
    assert np.array_equal(unpack(pack(keys), 2), keys)
    order = np.lexsort(keys.T[::-1])
    assert np.all(np.diff(pack(keys[order])) >= 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 3))
def test_cross_nested(N, d):
    small, big = hyperbolic_cross(N, d), hyperbolic_cross(N + 1, d)
    assert small.issubset(big)
