from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcremez.indexsets import dyadic_block_wide, hyperbolic_cross, hyperbolic_layer, step_hyperbolic
from hcremez.kernels import (
    KernelSpec,
    block_kernel,
    dirichlet,
    hyperbolic_vp_kernel,
    hyperbolic_vp_separable,
    jackson_kernel,
    layer_vp_kernel,
    layer_vp_separable,
    sup_norm,
    vallee_poussin_1d,
)
from hcremez.measure import Grid, lp_norm
from hcremez.spectral import TrigPoly, convolve, evaluate_on_grid, random_trigpoly, separable_reduce_on_grid

ONE_PLUS_2COS = TrigPoly.from_dict(1, {-1: 1.0, 0: 1.0, 1: 1.0})


def l1(kernel, G):
    return lp_norm(evaluate_on_grid(kernel, Grid((G,) * kernel.dim)), 1)


def test_dirichlet():
    assert dirichlet(0).allclose(TrigPoly.constant(1))
    assert dirichlet(1).allclose(ONE_PLUS_2COS)
    for m in (0, 3, 10):
        assert dirichlet(m).l2_norm() ** 2 == pytest.approx(2 * m + 1)


def test_vallee_poussin_1d():
    assert vallee_poussin_1d(1).allclose(ONE_PLUS_2COS)
    assert vallee_poussin_1d(4).coefficient([6]) == pytest.approx(0.5)
    for m in range(1, 65):
        assert l1(vallee_poussin_1d(m), 16 * m) <= 3.0


def test_blocks():
    assert block_kernel((1,), 1).allclose(TrigPoly.from_dict(1, {-1: 1.0, 1: 1.0}))
    assert block_kernel((0, 0), 2).allclose(TrigPoly.constant(2))
    assert block_kernel((3, 4), 2).support.issubset(dyadic_block_wide((3, 4)))


def test_blocks_telescope():
    total = sum((block_kernel((s,)) for s in range(5)), TrigPoly.zero(1))
    assert total.allclose(vallee_poussin_1d(8), 1e-14)


def test_hyperbolic_vp_small_cases():
    v = hyperbolic_vp_kernel(4, 1)
    assert np.allclose(v.coefficients_at(np.arange(-4, 5)[:, None]), 1.0)
    assert np.all(np.abs(v.keys) < 8)
    w = hyperbolic_vp_kernel(1, 2)
    box = np.array([[a, b] for a in (-1, 0, 1) for b in (-1, 0, 1)])
    assert np.allclose(w.coefficients_at(box), 1.0)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("N", [1, 2, 3, 5, 8, 12, 16])
def test_hyperbolic_vp_flat_and_supported(N, d):
    v = hyperbolic_vp_kernel(N, d)
    assert np.allclose(v.coefficients_at(hyperbolic_cross(N, d).members), 1.0, atol=1e-12)
    assert v.support.issubset(hyperbolic_cross(2 ** d * N, d))
    assert np.all(v.coeffs.real >= -1e-15)


def test_reproduction_d2_n16(rng):
    V = hyperbolic_vp_kernel(16, 2)
    for _ in range(5):
        f = random_trigpoly(hyperbolic_cross(16, 2), rng)
        assert convolve(f, V).allclose(f, 1e-12)


def test_layer_kernel_identity_and_zero_region():
    n = 6
    dv = layer_vp_kernel(n, 2)
    layer = hyperbolic_layer(n, 2)
    assert np.allclose(dv.coefficients_at(layer.members), 1.0)
    # wide blocks reach one level down per axis, so Q_{n-2} is touched at k = (3, 3)
    assert np.allclose(dv.coefficients_at(step_hyperbolic(n - 3, 2).members), 0.0)
    assert dv.coefficient([3, 3]) == pytest.approx(0.25)


def test_layer_kernel_l1_linear():
    ratios = []
    for n in range(6, 13):
        sp = layer_vp_separable(n, 2)
        grid = Grid.for_degree(sp.max_degree(), 2)
        ratios.append(lp_norm(separable_reduce_on_grid(sp, grid, (1.0,)), 1.0) / n)
    assert max(ratios) / min(ratios) <= 2.0


def test_jackson():
    assert jackson_kernel(2, 1).allclose(TrigPoly.from_dict(1, {-1: 0.25, 0: 0.5, 1: 0.25}))
    for n, r in [(1, 1), (3, 2), (8, 3)]:
        assert sup_norm(jackson_kernel(n, r)) == pytest.approx(1.0)
    vals = evaluate_on_grid(jackson_kernel(8, 2), Grid((4096,))).values
    assert np.all(vals.real >= -1e-15) and np.allclose(vals.imag, 0, atol=1e-15)


def test_sup_norm_exact():
    v = hyperbolic_vp_kernel(16, 2)
    grid_max = lp_norm(evaluate_on_grid(v, Grid((256, 256))), math.inf)
    assert sup_norm(v) == pytest.approx(grid_max, rel=1e-12)
    assert sup_norm(hyperbolic_vp_separable(16, 2)) == pytest.approx(grid_max, rel=1e-12)


@pytest.mark.parametrize("text,kind", [("vp:N=8,d=2", "hyperbolic_vp"), ("block:s=3x4", "block"),
                                       ("jackson:n=4,r=2", "jackson"), ("layer:n=5", "layer_vp")])
def test_kernel_spec(text, kind):
    spec = KernelSpec.parse(text)
    assert spec.kind == kind
    assert KernelSpec.parse(str(spec)) == spec
    assert spec.build().dim == spec.dim


@pytest.mark.parametrize("text", ["vp:N=8", "nope:m=1", "dirichlet:m"])
def test_kernel_spec_errors(text):
    with pytest.raises(ValueError):
        KernelSpec.parse(text)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**31 - 1))
def test_hyperbolic_vp_reproduces_random(N, seed):
    rng = np.random.default_rng(seed)
    f = random_trigpoly(hyperbolic_cross(N, 2), rng)
    assert convolve(f, hyperbolic_vp_kernel(N, 2)).allclose(f, 1e-12)
