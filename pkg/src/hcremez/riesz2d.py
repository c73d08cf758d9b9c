"""Riesz products over residue families of dyadic blocks in two variables.

For a family ``H`` of block vectors on one hyperbolic layer, spaced ``a``
apart in the first coordinate, the product ``prod (1 + i t_s / sqrt(N))`` with
``t_s = A_s / M`` stays bounded, while its nonlinear part ``w`` lives far out in
frequency.  Subtracting ``-M sqrt(N) Im(w)`` from the sum of blocks lowers the
sup norm of the layer kernel without touching its coefficients on ``Q_n``.

Everything is kept as a ``SeparablePoly``: a product over a subset ``S`` of
the family is ``(prod A_{s_1})(x_1) * (prod A_{s_2})(x_2)``, and since block
coefficients are nonnegative no cancellation occurs inside a term, so the
smallest dyadic level of each factor is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from hcremez._config import ResourceLimitError, tolerance
from hcremez.indexsets import hyperbolic_layer, layer_residue_family, level
from hcremez.kernels import block_1d, layer_vp_separable, sup_norm
from hcremez.measure import Grid, lp_norm
from hcremez.remez import CheckResult, _result, remez_ratio
from hcremez.spectral import (
    Poly1D,
    SeparablePoly,
    TrigPoly,
    evaluate_on_grid,
    separable_reduce_on_grid,
)

__all__ = [
    "RieszConfig",
    "OrthogonalityError",
    "ReproductionError",
    "riesz_product",
    "riesz_product_separable",
    "riesz_decompose",
    "product_bound",
    "check_product_bound",
    "check_imaginary_bound",
    "layer_correction",
    "modified_layer_kernel",
    "LayerKernelStats",
    "verify_theorem_3_2",
]

DEFAULT_A = 6
MAX_KERNEL_LAYER = 18


class OrthogonalityError(AssertionError):
    """A remainder has a nonzero coefficient where it must vanish."""


class ReproductionError(AssertionError):
    """A kernel fails to act as the identity on its target space."""


@dataclass(frozen=True)
class RieszConfig:
    """One residue family ``H_n(a, b)`` with normalization ``M = max ||A_s||_inf``."""

    n: int
    a: int
    b: int
    members: tuple
    M: float

    @classmethod
    def build(cls, n: int, a: int = DEFAULT_A, b: int = 0) -> "RieszConfig":
        if a < 6:
            raise ValueError("the remainder estimate needs a >= 6")
        fam = layer_residue_family(n, a, b)
        M = max((_block_sup(s) for s in fam.members), default=0.0)
        return cls(n, a, b, fam.members, M)

    @property
    def Ncount(self) -> int:
        return len(self.members)


def _block_sup(s) -> float:
    return math.prod(float(np.sum(block_1d(v).coeffs)) for v in s)


def _subset_factors(members) -> tuple:
    u = Poly1D([1.0], 0)
    v = Poly1D([1.0], 0)
    for s1, s2 in members:
        u = u * block_1d(s1)
        v = v * block_1d(s2)
    return u, v


def riesz_product_separable(cfg: RieszConfig, min_order: int = 0, only_odd: bool = False) -> SeparablePoly:
    """``Phi`` expanded over subsets ``S`` of the family, keeping ``|S| >= min_order``."""
    if cfg.Ncount == 0:
        raise ValueError(f"empty family H_{cfg.n}({cfg.a},{cfg.b})")
    N = cfg.Ncount
    unit = 1j / (math.sqrt(N) * cfg.M)
    terms = []
    for k in range(min_order, N + 1):
        if only_odd and k % 2 == 0:
            continue
        for S in itertools.combinations(cfg.members, k):
            terms.append((unit ** k, _subset_factors(S)))
    return SeparablePoly(2, terms)


def riesz_product(cfg: RieszConfig, cap: int = 20_000_000) -> TrigPoly:
    """``Phi = prod_{s in H} (1 + i A_s / (M sqrt(N)))`` as a sparse polynomial."""
    return riesz_product_separable(cfg).to_trigpoly(cap)


def product_bound(Ncount: int) -> float:
    """``(1 + 1/N)^(N/2)``, the pointwise bound on ``|Phi|``."""
    return (1.0 + 1.0 / Ncount) ** (Ncount / 2.0)


def _term_min_levels(sp: SeparablePoly) -> list:
    return [sum(f.min_level() for f in fs) for _, fs in sp.terms]


def _check_vanishes(sp: SeparablePoly, m: int, what: str):
    low = [lv for lv in _term_min_levels(sp) if lv <= m]
    if low:
        raise OrthogonalityError(f"{what} has a term reaching level {min(low)} <= {m}")


def riesz_decompose(phi, cfg: RieszConfig):
    """Split ``Phi = 1 + (i / sqrt(N)) sum t_s + g`` and check ``g`` vanishes on ``Q_{n+a-6}``.

    ``phi`` may be a ``TrigPoly`` (then ``g`` is returned as one) or a
    ``SeparablePoly`` from ``riesz_product_separable``.
    """
    m = cfg.n + cfg.a - 6
    one = Poly1D([1.0], 0)
    unit = 1j / (math.sqrt(cfg.Ncount) * cfg.M)
    lin_sp = SeparablePoly(2, [(1.0, (one, one))]
                           + [(unit, (block_1d(s1), block_1d(s2))) for s1, s2 in cfg.members])
    if isinstance(phi, SeparablePoly):
        g = riesz_product_separable(cfg, 2)
        _check_vanishes(g, m, "remainder")
        return lin_sp, g
    linear = lin_sp.to_trigpoly()
    g = phi - linear
    if len(g) and np.any(level(g.keys).sum(axis=1) <= m):
        raise OrthogonalityError(f"remainder has a coefficient inside Q_{m}")
    return linear, g


def _eval_grid(sp: SeparablePoly, cap: int) -> Grid:
    degs = sp.max_degree()
    return Grid(tuple(min(cap, 2 * (2 * dg + 1)) for dg in degs))


def check_product_bound(cfg: RieszConfig, axis_cap: int = 8192) -> CheckResult:
    """``max |Phi|`` over grid nodes against ``(1 + 1/N)^(N/2)``."""
    phi = riesz_product_separable(cfg)
    st = separable_reduce_on_grid(phi, _eval_grid(phi, axis_cap), ()).stats
    return _result("riesz_product_bound", st.max_abs, product_bound(cfg.Ncount), tolerance(math.inf),
                   n=cfg.n, a=cfg.a, b=cfg.b, Ncount=cfg.Ncount)


def check_imaginary_bound(cfg: RieszConfig, axis_cap: int = 8192) -> CheckResult:
    """``||sum t_s + sqrt(N) Im(w)||_inf <= e^(1/2) sqrt(N)`` on grid nodes.

    The left side is ``sqrt(N) Im(Phi)``.
    """
    phi = riesz_product_separable(cfg)
    N = cfg.Ncount
    im = phi.scale(-0.5j * math.sqrt(N)) + _conj(phi).scale(0.5j * math.sqrt(N))
    st = separable_reduce_on_grid(im, _eval_grid(phi, axis_cap), ()).stats
    return _result("riesz_imaginary_bound", st.max_abs, math.exp(0.5) * math.sqrt(N), tolerance(math.inf),
                   n=cfg.n, a=cfg.a, b=cfg.b, Ncount=N)


def _conj(sp: SeparablePoly) -> SeparablePoly:
    """Pointwise conjugate; block factors are real and even, so only weights change."""
    return SeparablePoly(sp.dim, [(np.conj(w), fs) for w, fs in sp.terms])


# ---------------------------------------------------------------------------

def layer_correction(n: int, a: int = DEFAULT_A) -> tuple:
    """``T`` summed over layers ``n..n+2`` and residues, with the families used.

    Each family contributes ``-M sqrt(N) Im(w)``; only odd subsets of size
    at least 3 have a nonzero imaginary part.
    """
    terms = []
    used = []
    for ell in range(n, n + 3):
        for b in range(a):
            cfg = RieszConfig.build(ell, a, b)
            if cfg.Ncount == 0:
                continue
            used.append(cfg)
            if cfg.Ncount < 3:
                continue
            odd = riesz_product_separable(cfg, 3, only_odd=True)
            scale = -cfg.M * math.sqrt(cfg.Ncount)
            for w, fs in odd.terms:
                terms.append((scale * w.imag, fs))
    return SeparablePoly(2, terms), used


EXHAUSTIVE_LAYER = 16


def _layer_keys(n: int, per_block: int = 4096, seed: int = 0) -> np.ndarray:
    """All of ``dQ_n`` up to ``EXHAUSTIVE_LAYER``, else a seeded sample from every block."""
    if n <= EXHAUSTIVE_LAYER:
        return hyperbolic_layer(n, 2).members
    rng = np.random.default_rng([seed, n])
    parts = []
    for s1 in range(n + 1):
        cols = []
        for s in (s1, n - s1):
            lo = 1 << (s - 1) if s >= 1 else 0
            mag = rng.integers(lo, 1 << s, size=per_block)
            cols.append(np.where(rng.random(per_block) < 0.5, -mag, mag))
        parts.append(np.stack(cols, axis=1))
    return np.vstack(parts)


@dataclass
class LayerKernelStats:
    n: int
    L1_raw: float
    Linf_raw: float
    L1_corrected: float
    Linf_corrected: float
    correction_terms: int
    families: int
    grid: tuple

    @property
    def ratio_to_n(self) -> float:
        return self.L1_corrected / self.n

    @property
    def ratio_to_sqrt_n_2n(self) -> float:
        return self.Linf_corrected / (math.sqrt(self.n) * 2.0 ** self.n)

    def row(self) -> dict:
        return {"n": self.n, "L1_raw": self.L1_raw, "Linf_raw": self.Linf_raw,
                "L1_corrected": self.L1_corrected, "Linf_corrected": self.Linf_corrected,
                "ratio_to_n": self.ratio_to_n, "ratio_to_sqrt_n_2n": self.ratio_to_sqrt_n_2n}


def modified_layer_kernel(n: int, a: int = DEFAULT_A, oversample: float = 2, norms: bool = True,
                          check_reproduction: bool = True):
    """``K = Delta V_n - T`` with ``T`` vanishing on ``Q_n``.

    Returns ``(K, T, stats)`` with ``K`` and ``T`` as ``SeparablePoly``;
    ``stats`` is ``None`` when ``norms`` is false.
    """
    if n < 2 * a:
        raise ValueError(f"n must be >= {2 * a} so that residue families are nonempty")
    if n > MAX_KERNEL_LAYER:
        raise ResourceLimitError(f"layer kernel beyond n={MAX_KERNEL_LAYER} needs dense factors of length 2^(n+3)")
    dv = layer_vp_separable(n, 2)
    T, used = layer_correction(n, a)
    _check_vanishes(T, n, "correction")
    K = dv - T
    if check_reproduction:
        keys = _layer_keys(n)
        c = K.coefficients_at(keys)
        if not np.allclose(c, 1.0, rtol=0, atol=1e-9):
            raise ReproductionError(f"K is not the identity on T(dQ_{n}): max error {np.abs(c - 1).max():.3g}")
    if not norms:
        return K, T, None
    grid = Grid.for_degree(K.max_degree(), oversample)
    raw = separable_reduce_on_grid(dv, grid, (1.0,))
    l1_raw = lp_norm(raw, 1.0)
    linf_raw = sup_norm(dv)
    if len(T) == 0:
        l1_k, linf_k = l1_raw, linf_raw
    else:
        red = separable_reduce_on_grid(K, grid, (1.0,))
        l1_k, linf_k = lp_norm(red, 1.0), red.stats.max_abs
    stats = LayerKernelStats(n, l1_raw, linf_raw, l1_k, linf_k, len(T), len(used), grid.sizes)
    return K, T, stats


# ---------------------------------------------------------------------------

@dataclass
class Theorem32Report:
    n: int
    b: float
    ratio: float
    bound: float
    kernel_l1: float
    kernel_sup: float
    grid: tuple
    check: CheckResult


def _kernel_norms_on(K: SeparablePoly, grid: Grid) -> tuple:
    red = separable_reduce_on_grid(K, grid, (1.0,))
    return lp_norm(red, 1.0), red.stats.max_abs


def verify_theorem_3_2(f: TrigPoly, n: int, a: int = DEFAULT_A, kernel=None, grid: Grid | None = None,
                       budget: int | None = None) -> Theorem32Report:
    """Sup-norm Remez inequality on the layer ``dQ_n`` via ``f = f * K``.

    The grid defaults to the smallest size on which the discrete
    convolution with ``K`` reproduces ``f`` exactly; both kernel norms are
    taken on that grid, the budget is ``1 / (2 ||K||_inf)`` and the bound
    ``2 ||K||_1``.
    """
    if f.dim != 2:
        raise ValueError("layer verification is two-dimensional")
    if n < 2 * a:
        raise ValueError(f"n must be >= {2 * a}")
    layer = hyperbolic_layer(n, 2)
    if not f.support.issubset(layer):
        raise ValueError(f"f is not supported in dQ_{n}")
    K = kernel if kernel is not None else modified_layer_kernel(n, a, norms=False, check_reproduction=False)[0]
    kdeg = K.max_degree()
    fdeg = f.max_degree()
    need = tuple(kd + fd + 1 for kd, fd in zip(kdeg, fdeg))
    grid = grid or Grid(tuple(next_fast_len(m) for m in need))
    if any(g < m for g, m in zip(grid.sizes, need)):
        raise ValueError("grid too coarse for the discrete convolution identity")
    l1, linf = _kernel_norms_on(K, grid)
    b = 1.0 / (2.0 * linf)
    cells = int(math.floor(b * grid.total + 1e-9))
    g = evaluate_on_grid(f, grid, powers=(), topk=cells + 1, budget=budget)
    rep = remez_ratio(g, b, math.inf)
    chk = _result("theorem_3_2", rep.ratio, 2 * l1, tolerance(math.inf), n=n, b=b)
    return Theorem32Report(n, b, rep.ratio, 2 * l1, l1, linf, grid.sizes, chk)
