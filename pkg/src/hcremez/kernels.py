"""Summation kernels: Dirichlet, de la Vallee Poussin, dyadic blocks, Jackson.

Every kernel here has nonnegative Fourier coefficients, so its sup norm is
its value at the origin, i.e. the sum of its coefficients.  The
multivariate kernels are sums of tensor products and are built as
``SeparablePoly`` first; ``TrigPoly`` forms are flattened from those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from hcremez.indexsets import MAX_DIM, hyperbolic_cross, layer_vectors
from hcremez.spectral import Poly1D, SeparablePoly, TrigPoly

__all__ = [
    "KernelSpec",
    "KernelConstructionError",
    "dirichlet",
    "vallee_poussin_1d",
    "block_kernel",
    "hyperbolic_vp_kernel",
    "hyperbolic_vp_separable",
    "layer_vp_kernel",
    "layer_vp_separable",
    "jackson_kernel",
    "sup_norm",
    "block_1d",
    "partial_block_sum",
]


class KernelConstructionError(RuntimeError):
    """A constructed kernel failed its flatness verification."""


# ---------------------------------------------------------------------------
# univariate dense building blocks

@lru_cache(maxsize=64)
def _vp_half(m: int) -> np.ndarray:
    k = np.arange(2 * m, dtype=np.float64)
    return np.minimum(1.0, (2 * m - k) / m)


def _vp_dense(m: int) -> Poly1D:
    return Poly1D.symmetric(_vp_half(m))


@lru_cache(maxsize=64)
def block_1d(s: int) -> Poly1D:
    """Univariate dyadic block ``A_s`` (``A_0 = 1``, ``A_1 = V_1 - 1``)."""
    if s < 0:
        raise ValueError("block index must be >= 0")
    if s == 0:
        return Poly1D([1.0], 0)
    if s == 1:
        return Poly1D([1.0, 0.0, 1.0], -1)
    return _vp_dense(1 << (s - 1)) - _vp_dense(1 << (s - 2))


@lru_cache(maxsize=64)
def partial_block_sum(b: int) -> Poly1D:
    """``A_0 + ... + A_b``, which telescopes to ``V_{2^(b-1)}`` (1 for b = 0, 0 for b < 0)."""
    if b < 0:
        return Poly1D([0.0], 0)
    if b == 0:
        return Poly1D([1.0], 0)
    return _vp_dense(1 << (b - 1))


def dirichlet(m: int) -> TrigPoly:
    """``D_m``: coefficient 1 on ``|k| <= m``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    ks = np.arange(-m, m + 1)
    return TrigPoly(1, ks[:, None], np.ones(ks.size))


def vallee_poussin_1d(m: int) -> TrigPoly:
    """``V_m = (1/m) sum_{l=m}^{2m-1} D_l``: 1 on ``|k| <= m``, ramp ``(2m-|k|)/m`` after."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return _vp_dense(m).to_trigpoly()


def block_kernel(s, d: int | None = None) -> TrigPoly:
    """Tensor product ``prod_j A_{s_j}(x_j)``."""
    s = tuple(int(v) for v in np.atleast_1d(s))
    if d is not None and len(s) != d:
        raise ValueError("block vector length differs from the dimension")
    if any(v < 0 for v in s):
        raise ValueError("block indices must be >= 0")
    return SeparablePoly(len(s), [(1.0, tuple(block_1d(v) for v in s))]).to_trigpoly()


# ---------------------------------------------------------------------------
# hyperbolic kernels

def _compositions(k: int, total: int):
    if k == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(k - 1, total - first):
            yield (first,) + rest


def _vp_or_zero(m: int) -> Poly1D:
    return Poly1D([0.0], 0) if m == 0 else _vp_dense(m)


def _staircase_terms(N: int, d: int) -> list:
    """Terms of ``V_N`` in ``d`` variables, recursing on the first coordinate.

    ``V_N = sum_i (V_i - V_{i-1})(x_1) * V'_{N // i}(x')`` with ``V'`` the
    kernel in the remaining variables; indices sharing ``N // i`` are merged.
    A frequency with ``V_i - V_{i-1}`` active has ``|k_1| >= i``, so the
    tail factor is flat where needed, and ``|k_1| < 2i`` keeps the support
    inside ``Gamma(2^d N)``.
    """
    if d == 1:
        return [(1.0, (_vp_dense(N),))]
    terms = []
    i = 1
    while i <= N:
        q = N // i
        hi = N // q
        head = _vp_dense(hi) - _vp_or_zero(i - 1)
        for w, tail in _staircase_terms(q, d - 1):
            terms.append((w, (head,) + tail))
        i = hi + 1
    return terms


def hyperbolic_vp_separable(N: int, d: int) -> SeparablePoly:
    """``V_N`` as a sum of tensor products, with flatness on ``Gamma(N)`` verified."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must lie in 1..{MAX_DIM}")
    sp = SeparablePoly(d, _staircase_terms(N, d))
    c = sp.coefficients_at(hyperbolic_cross(N, d).members)
    if not np.allclose(c, 1.0, rtol=0, atol=1e-12):
        raise KernelConstructionError(f"kernel is not flat on Gamma({N}) in d={d}")
    return sp


def hyperbolic_vp_kernel(N: int, d: int) -> TrigPoly:
    """``V_N``: 1 on ``Gamma(N)``, 0 off ``Gamma(2^d N)``."""
    return hyperbolic_vp_separable(N, d).to_trigpoly()


def layer_vp_separable(n: int, d: int = 2) -> SeparablePoly:
    """``Delta V_n = sum_{n <= |s|_1 <= n+2} A_s`` as ``d-1`` blocks times a partial-sum difference."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must lie in 1..{MAX_DIM}")

    terms = []
    for s in _compositions(d - 1, n + 2):
        rest = n + 2 - sum(s)
        last = partial_block_sum(rest) - partial_block_sum(n - 1 - sum(s))
        if last.is_zero():
            continue
        terms.append((1.0, tuple(block_1d(v) for v in s) + (last,)))
    return SeparablePoly(d, terms)


def layer_vp_kernel(n: int, d: int = 2) -> TrigPoly:
    return layer_vp_separable(n, d).to_trigpoly()


def layer_blocks(n: int, d: int = 2) -> list:
    """The block vectors summed in ``Delta V_n``."""
    return [s for m in range(n, n + 3) for s in layer_vectors(m, d)]


# ---------------------------------------------------------------------------

def _fejer_square(n: int) -> Poly1D:
    k = np.arange(n, dtype=np.float64)
    return Poly1D.symmetric((n - k) / (n * n))


def jackson_kernel(n: int, r: int) -> TrigPoly:
    """``(sin(n t / 2) / (n sin(t / 2)))^(2r)`` built as the r-th power of a Fejer factor."""
    if n < 1 or r < 1:
        raise ValueError("need n >= 1 and r >= 1")
    base = _fejer_square(n)
    out = base
    for _ in range(r - 1):
        out = out * base
    return out.to_trigpoly()


def sup_norm(kernel) -> float:
    """Sup norm of a kernel with nonnegative coefficients (its value at 0)."""
    if isinstance(kernel, SeparablePoly):
        return float(sum(w.real * math.prod(float(np.sum(f.coeffs.real)) for f in fs)
                         for w, fs in kernel.terms))
    c = kernel.coeffs
    if np.any(np.abs(c.imag) > 1e-12) or np.any(c.real < -1e-12):
        raise ValueError("sup norm shortcut needs nonnegative coefficients")
    return float(np.sum(c.real))


# ---------------------------------------------------------------------------

_KINDS = {
    "dirichlet": "dirichlet",
    "vp1d": "vp1d",
    "block": "block",
    "vp": "hyperbolic_vp",
    "hyperbolic_vp": "hyperbolic_vp",
    "layer": "layer_vp",
    "layer_vp": "layer_vp",
    "jackson": "jackson",
}

_REQUIRED = {
    "dirichlet": ("m",),
    "vp1d": ("m",),
    "block": ("s",),
    "hyperbolic_vp": ("N", "d"),
    "layer_vp": ("n",),
    "jackson": ("n", "r"),
}


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel description, parsable from strings like ``"vp:N=32,d=2"``.

    ``block`` takes ``s`` as ``x``-separated components, e.g. ``"block:s=3x4"``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = _KINDS.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        missing = [k for k in _REQUIRED[kind] if k not in self.params]
        if missing:
            raise ValueError(f"kernel {kind} needs parameters {missing}")

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        kind, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed kernel parameter {item!r}")
            key = key.strip()
            if key == "s":
                params[key] = tuple(int(v) for v in val.split("x"))
            else:
                params[key] = int(val)
        return cls(kind.strip(), params)

    @property
    def dim(self) -> int:
        if self.kind == "block":
            return len(self.params["s"])
        if self.kind in ("hyperbolic_vp", "layer_vp"):
            return self.params.get("d", 2)
        return 1

    def build(self) -> TrigPoly:
        p = self.params
        if self.kind == "dirichlet":
            return dirichlet(p["m"])
        if self.kind == "vp1d":
            return vallee_poussin_1d(p["m"])
        if self.kind == "block":
            return block_kernel(p["s"])
        if self.kind == "hyperbolic_vp":
            return hyperbolic_vp_kernel(p["N"], p["d"])
        if self.kind == "layer_vp":
            return layer_vp_kernel(p["n"], p.get("d", 2))
        return jackson_kernel(p["n"], p["r"])

    def __str__(self):
        def fmt(v):
            return "x".join(map(str, v)) if isinstance(v, tuple) else str(v)
        return self.kind + ":" + ",".join(f"{k}={fmt(v)}" for k, v in sorted(self.params.items()))
