from __future__ import annotations

import math

import numpy as np
import pytest

from hcremez.indexsets import hyperbolic_layer, step_hyperbolic
from hcremez.kernels import block_kernel, layer_vp_separable
from hcremez.riesz2d import (
    MAX_KERNEL_LAYER,
    OrthogonalityError,
    RieszConfig,
    check_imaginary_bound,
    check_product_bound,
    layer_correction,
    modified_layer_kernel,
    product_bound,
    riesz_decompose,
    riesz_product,
    riesz_product_separable,
    verify_theorem_3_2,
)
from hcremez._config import ResourceLimitError
from hcremez.spectral import TrigPoly, convolve, random_trigpoly


def test_single_factor_product():
    cfg = RieszConfig.build(12, 6, 0)
    assert cfg.members == ((6, 6),)
    phi = riesz_product(cfg)
    expected = TrigPoly.constant(2) + block_kernel((6, 6)) * (1j / cfg.M)
    assert phi.allclose(expected, 1e-14)
    linear, g = riesz_decompose(phi, cfg)
    assert g.is_zero() and linear.allclose(phi, 1e-14)
    res = check_product_bound(cfg)
    assert res.holds and res.rhs == pytest.approx(math.sqrt(2))


def test_three_member_family():
    cfg = RieszConfig.build(24, 6, 0)
    assert cfg.members == ((6, 18), (12, 12), (18, 6))
    sp = riesz_product_separable(cfg)
    lin, g = riesz_decompose(sp, cfg)
    assert g.vanishes_on_step_cross(24)
    assert len(g.terms) == 4


def test_imaginary_bound_single():
    res = check_imaginary_bound(RieszConfig.build(13, 6, 1))
    assert res.holds and res.rhs == pytest.approx(math.exp(0.5))


def test_product_bound_values():
    assert product_bound(1) == pytest.approx(math.sqrt(2))
    for N in (1, 2, 5, 50):
        assert product_bound(N) <= math.exp(0.5)


def test_config_errors():
    with pytest.raises(ValueError):
        RieszConfig.build(12, 5, 0)
    with pytest.raises(ValueError):
        riesz_product_separable(RieszConfig.build(8, 6, 0))


def test_decompose_detects_low_remainder():
    cfg = RieszConfig.build(12, 6, 0)
    phi = riesz_product(cfg) + TrigPoly.monomial([1, 0], 0.1)
    with pytest.raises(OrthogonalityError):
        riesz_decompose(phi, cfg)


def test_correction_empty_below_three_members():
    T, used = layer_correction(12)
    assert len(T) == 0 and all(c.Ncount == 1 for c in used)


def test_odd_part_vanishes_on_step_cross():
    # the correction at layer 24 is built from exactly these odd subsets
    odd = riesz_product_separable(RieszConfig.build(24, 6, 0), 3, only_odd=True)
    assert len(odd.terms) == 1
    assert odd.vanishes_on_step_cross(24)
    assert np.allclose(odd.coefficients_at(step_hyperbolic(6, 2).members), 0.0)


def test_modified_kernel_n12():
    K, T, stats = modified_layer_kernel(12)
    assert len(T) == 0
    assert stats.Linf_corrected <= stats.Linf_raw * (1 + 1e-12)
    assert np.allclose(K.coefficients_at(hyperbolic_layer(12, 2).members), 1.0, atol=1e-9)
    dv = layer_vp_separable(12, 2)
    assert stats.Linf_raw == pytest.approx(sum(w.real * math.prod(float(f.coeffs.sum()) for f in fs)
                                                for w, fs in dv.terms))


def test_modified_kernel_limits():
    with pytest.raises(ValueError):
        modified_layer_kernel(11)
    with pytest.raises(ResourceLimitError):
        modified_layer_kernel(MAX_KERNEL_LAYER + 1)


@pytest.mark.slow
def test_theorem_3_2_single_harmonic():
    rep = verify_theorem_3_2(TrigPoly.monomial([5, 300]), 12)
    assert rep.ratio == pytest.approx(1.0, abs=1e-12)
    assert rep.check.holds
    with pytest.raises(ValueError):
        verify_theorem_3_2(TrigPoly.monomial([5, 100]), 12)


@pytest.mark.slow
def test_theorem_3_2_random_layer(rng):
    layer = hyperbolic_layer(12, 2)
    K = modified_layer_kernel(12, norms=False)[0]
    f = random_trigpoly(layer, rng)
    assert convolve(f, K.to_trigpoly()).allclose(f, 1e-9)
    assert verify_theorem_3_2(f, 12, kernel=K).check.holds
