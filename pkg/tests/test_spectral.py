from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcremez import _backend, _pykernels
from hcremez.indexsets import IndexSet, hyperbolic_cross
from hcremez.kernels import hyperbolic_vp_kernel, layer_vp_separable
from hcremez.measure import Grid
from hcremez.spectral import (
    AliasingError,
    Poly1D,
    SeparablePoly,
    TrigPoly,
    coefficients_from_grid,
    convolve,
    evaluate_on_grid,
    multiply,
    random_trigpoly,
    separable_reduce_on_grid,
)

E1 = TrigPoly.monomial([1])
TWO_COS = TrigPoly.from_dict(1, {1: 1.0, -1: 1.0})


def test_evaluate_constant_and_exponential():
    g = evaluate_on_grid(TrigPoly.constant(2), Grid((4, 6)))
    assert np.allclose(g.values, 1.0)
    v = evaluate_on_grid(E1, Grid((8,))).values
    assert np.allclose(v, np.exp(2j * np.pi * np.arange(8) / 8), atol=1e-14)


def test_round_trip(rng):
    G = hyperbolic_cross(8, 2)
    f = random_trigpoly(G, rng)
    back = coefficients_from_grid(evaluate_on_grid(f, Grid((20, 20))), G)
    assert back.allclose(f, 1e-12)


def test_coefficients_examples():
    grid = Grid((8,))
    c = coefficients_from_grid(evaluate_on_grid(TWO_COS, grid), IndexSet.from_iterable(1, [-1, 1]))
    assert c.allclose(TWO_COS, 1e-14)
    zero = coefficients_from_grid(evaluate_on_grid(TrigPoly.zero(1), grid), IndexSet.from_iterable(1, [-1, 0, 1]))
    assert zero.is_zero()
    e2 = coefficients_from_grid(evaluate_on_grid(TrigPoly.monomial([2]), grid),
                                IndexSet.from_iterable(1, [-1, 0, 1]))
    assert e2.is_zero()


def test_coefficients_alias_error():
    with pytest.raises(AliasingError):
        coefficients_from_grid(evaluate_on_grid(E1, Grid((4,))), IndexSet.from_iterable(1, range(-3, 4)))


@pytest.mark.parametrize("k", [(0, 0), (3, -2), (-8, 1)])
def test_convolve_reproduces_harmonic(k):
    f = TrigPoly.monomial(k, 0.5 - 2j)
    assert convolve(f, hyperbolic_vp_kernel(8, 2)).allclose(f, 1e-12)


def test_convolve_mean_and_disjoint(rng):
    f = random_trigpoly(hyperbolic_cross(5, 2), rng)
    m = convolve(f, TrigPoly.constant(2))
    assert m.allclose(TrigPoly.constant(2, f.mean()))
    assert convolve(TrigPoly.monomial([1, 1]), TrigPoly.monomial([2, 0])).is_zero()


def test_multiply_examples():
    f = TrigPoly.from_dict(1, {3: 1j, -2: 0.5})
    assert multiply(TrigPoly.constant(1), f).allclose(f)
    assert multiply(E1, E1).allclose(TrigPoly.monomial([2]))
    assert multiply(TWO_COS, TWO_COS).allclose(TrigPoly.from_dict(1, {0: 2.0, 2: 1.0, -2: 1.0}))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 2))
def test_multiply_is_pointwise(seed, d):
    rng = np.random.default_rng(seed)
    f = random_trigpoly(hyperbolic_cross(6, d), rng)
    g = random_trigpoly(hyperbolic_cross(4, d), rng)
    grid = Grid((32,) * d)
    lhs = evaluate_on_grid(multiply(f, g), grid).values
    rhs = evaluate_on_grid(f, grid).values * evaluate_on_grid(g, grid).values
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_text_round_trip(rng):
    f = random_trigpoly(hyperbolic_cross(6, 2), rng)
    assert TrigPoly.from_text(f.to_text()).allclose(f, 0.0)


def test_streamed_evaluation_matches_dense(rng):
    f = random_trigpoly(hyperbolic_cross(10, 2), rng)
    grid = Grid((64, 48))
    dense = evaluate_on_grid(f, grid)
    streamed = evaluate_on_grid(f, grid, powers=(1.0, 2.0), topk=7, stream=True, budget=4096)
    a = np.abs(dense.values)
    assert streamed.stats.max_abs == pytest.approx(a.max(), rel=1e-12)
    assert streamed.stats.power_sums[2.0] / grid.total == pytest.approx(np.mean(a ** 2), rel=1e-10)
    assert np.allclose(np.sort(streamed.stats.top_values)[::-1], np.sort(a.ravel())[::-1][:7])


def test_separable_matches_flattened():
    sp = layer_vp_separable(5, 2)
    grid = Grid((128, 128))
    dense = np.abs(evaluate_on_grid(sp.to_trigpoly(), grid).values)
    red = separable_reduce_on_grid(sp, grid, (1.0, 2.0)).stats
    assert red.max_abs == pytest.approx(dense.max(), rel=1e-12)
    assert red.power_sums[1.0] == pytest.approx(dense.sum(), rel=1e-10)


def test_poly1d_product():
    a = Poly1D.symmetric([1.0, 0.5])
    assert (a * a).to_trigpoly().allclose(multiply(a.to_trigpoly(), a.to_trigpoly()))


@pytest.mark.parametrize("impl", ["python", "backend"])
def test_sparse_convolve_backends_agree(rng, impl):
    f = random_trigpoly(hyperbolic_cross(9, 2), rng)
    g = random_trigpoly(hyperbolic_cross(5, 2), rng)
    fn = _pykernels.sparse_convolve if impl == "python" else _backend.sparse_convolve
    from hcremez.indexsets import pack_origin
    keys, vals = fn(f.packed.copy(), f.coeffs.copy(), g.packed.copy(), g.coeffs.copy(), int(pack_origin(2)))
    got = TrigPoly.from_packed(2, keys, vals)
    assert got.allclose(multiply(f, g), 1e-12)


@pytest.mark.parametrize("complex_factors", [False, True])
def test_separable_reduce_backends_agree(rng, complex_factors):
    U = rng.standard_normal((5, 40))
    W = rng.standard_normal((5, 33))
    if complex_factors:
        U = U + 1j * rng.standard_normal(U.shape)
    wr, wc = rng.random(40), rng.random(33)
    powers = np.array([0.5, 1.0, 2.0, 3.0])
    m1, s1 = _pykernels.separable_reduce(U, W, wr, wc, powers)
    m2, s2 = _backend.separable_reduce(U, W, wr, wc, powers)
    F = np.abs(U.T @ W)
    assert m1 == pytest.approx(F.max()) and m2 == pytest.approx(F.max())
    ref = [np.sum(wr[:, None] * wc[None, :] * F ** p) for p in powers]
    assert np.allclose(s1, ref, rtol=1e-12) and np.allclose(s2, ref, rtol=1e-12)


def test_separable_poly_coefficients():
    sp = SeparablePoly(2, [(2.0, (Poly1D.symmetric([1.0, 1.0]), Poly1D([1.0], 0)))])
    assert sp.coefficients_at(np.array([[1, 0], [0, 1], [-1, 0]])).tolist() == [2.0, 0.0, 2.0]
