from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cos_x, sampled
from hcremez.indexsets import IndexSet, hyperbolic_cross
from hcremez.kernels import dirichlet, hyperbolic_vp_kernel
from hcremez.measure import Grid, GridFunction
from hcremez.remez import (
    NikolskiiParams,
    check_lemma_2_1,
    check_lemma_2_2,
    check_prop_2_1,
    check_prop_2_1p,
    check_prop_2_2,
    check_sparse_support,
    check_univariate_remez,
    nikolskii_to_remez_budget,
    remez_bound_reference,
    remez_lower_search,
    remez_ratio,
    sparse_support_remez_budget,
    verify_theorem_3_1,
)
from hcremez.spectral import TrigPoly, random_trigpoly

ONE = GridFunction(Grid((256,)), np.ones(256, dtype=complex))


@pytest.mark.parametrize("b", [0.0, 0.1, 0.5, 0.99])
def test_ratio_constant_sup(b):
    assert remez_ratio(ONE, b, math.inf).ratio == 1.0


def test_ratio_examples():
    assert remez_ratio(ONE, 0.75, 2).ratio == pytest.approx(2.0, rel=1e-14)
    rep = remez_ratio(cos_x(4096), 0.5, math.inf)
    assert rep.ratio == pytest.approx(math.sqrt(2), rel=2e-3)
    assert rep.b_eff == 0.5


def test_ratio_zero_rejected():
    with pytest.raises(ValueError):
        remez_ratio(GridFunction(Grid((8,)), np.zeros(8)), 0.1, 2)


def test_ratio_infinite_flag():
    g = GridFunction(Grid((8,)), np.array([1, 0, 0, 0, 0, 0, 0, 0], dtype=complex))
    rep = remez_ratio(g, 1 / 8, 2)
    assert rep.infinite and math.isinf(rep.ratio)


def test_bound_reference():
    assert remez_bound_reference(4, 0.1) == pytest.approx(math.exp(0.8))
    assert remez_bound_reference(4, 0.1) == pytest.approx(2.2255, abs=1e-4)
    assert remez_bound_reference(1, 3 * math.pi / 2) == pytest.approx((34 / math.pi) ** 2)
    assert remez_bound_reference(7, 0.0) == 1.0
    assert remez_bound_reference((3, 3), 0.01) == pytest.approx(math.exp(4 * math.sqrt(0.09)))
    with pytest.raises(ValueError):
        remez_bound_reference(1, 2 * math.pi - 17 / 2)


def test_lemma_2_1_constant_slack():
    b, p = 0.25, 2.0
    res = check_lemma_2_1(ONE, b, p)
    assert res.holds
    assert res.slack == pytest.approx(2 ** (1 / p) - (1 - b / 2) ** (-1 / p), rel=1e-3)


def test_implication_examples():
    g = cos_x(4096)
    assert check_lemma_2_1(g, 0.25, 2).holds
    assert check_lemma_2_2(g, 0.25, 2, 1).holds
    assert check_prop_2_1p(g, 0.25, 4, 2).holds
    d4 = sampled(dirichlet(4), 512)
    assert check_prop_2_1(d4, 1 / 8, math.inf, 2).holds
    res = check_lemma_2_2(ONE, 0.25, 2, 1)
    assert res.lhs == pytest.approx(res.rhs, rel=1e-12)
    assert check_prop_2_1(ONE, 0.25, math.inf, 1).holds
    assert check_prop_2_1p(ONE, 0.5, 2, 1).holds


def test_lemma_2_1_random_d2(rng):
    cross = hyperbolic_cross(16, 2)
    for _ in range(100):
        g = sampled(random_trigpoly(cross, rng), 64)
        assert check_lemma_2_1(g, rng.uniform(0.01, 0.5), rng.choice([0.5, 1, 2, 4])).holds


def test_budget_algebra():
    assert nikolskii_to_remez_budget(NikolskiiParams(math.inf, 1, 1, 1)) == pytest.approx((0.5, 2.0))
    b, factor = nikolskii_to_remez_budget(NikolskiiParams(math.inf, 2, 1, 100))
    assert b == pytest.approx(1 / 400) and factor == 2.0
    assert nikolskii_to_remez_budget(NikolskiiParams(math.inf, 0.5, 1, 1))[1] == 4.0
    with pytest.raises(ValueError):
        NikolskiiParams(1, 2)


def test_sparse_support():
    support = IndexSet.from_iterable(1, [1, 5, 9, 30])
    assert sparse_support_remez_budget(support, 1) == pytest.approx(1 / 16)
    single = TrigPoly.monomial([7])
    for p in (0.5, 1, 2):
        assert check_sparse_support(single, p).holds
    rng = np.random.default_rng(3)
    lac = IndexSet.from_iterable(1, [2 ** j for j in range(8)])
    for _ in range(50):
        f = random_trigpoly(lac, rng)
        assert check_sparse_support(f, 1, grid=Grid((2048,))).holds


def test_univariate_remez_check(rng):
    for n in (1, 4, 16):
        f = random_trigpoly(IndexSet.from_iterable(1, range(-n, n + 1)), rng)
        assert check_univariate_remez(sampled(f, 64 * n), 0.2, n).holds


def test_theorem_3_1_examples(rng):
    N = 16
    assert verify_theorem_3_1(hyperbolic_vp_kernel(N // 4, 2), N).check.holds
    rep = verify_theorem_3_1(TrigPoly.monomial([3, -5]), N)
    assert rep.ratio == pytest.approx(1.0, abs=1e-12) and rep.check.holds
    assert rep.b == pytest.approx(1 / (2 * rep.kernel_sup))
    with pytest.raises(ValueError):
        verify_theorem_3_1(TrigPoly.monomial([9, 9]), N)


def test_theorem_3_1_random(rng):
    cross = hyperbolic_cross(32, 2)
    for _ in range(20):
        assert verify_theorem_3_1(random_trigpoly(cross, rng), 32).check.holds


def test_lower_search():
    _, r, _ = remez_lower_search(1, 1, 0.0, 5, seed=0)
    assert r == 1.0
    _, r, hist = remez_lower_search(8, 1, 0.01, 40, seed=1)
    assert r <= math.exp(2 * 8 * 2 * math.pi * 0.01)
    assert all(a <= b for a, b in zip(hist, hist[1:]))


EXP = st.sampled_from([0.5, 1.0, 2.0, 4.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), EXP, EXP, st.floats(0.01, 0.6), st.integers(1, 2))
def test_implications_hold(seed, p, q, b, d):
    rng = np.random.default_rng(seed)
    g = sampled(random_trigpoly(hyperbolic_cross(6, d), rng), 32)
    assert check_lemma_2_1(g, b, p).holds
    assert check_prop_2_1(g, b, math.inf, q).holds
    if q < p:
        assert check_lemma_2_2(g, b, p, q).holds
        assert check_prop_2_1p(g, b, p, q).holds
        assert check_prop_2_2(g, p, q).holds


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), EXP, st.floats(0.0, 0.4), st.floats(0.0, 0.4))
def test_ratio_monotone_in_budget(seed, p, b1, b2):
    rng = np.random.default_rng(seed)
    g = sampled(random_trigpoly(hyperbolic_cross(5, 2), rng), 24)
    lo, hi = sorted((b1, b2))
    assert remez_ratio(g, lo, p).ratio <= remez_ratio(g, hi, p).ratio * (1 + 1e-12)
