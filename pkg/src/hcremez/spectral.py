"""Spectral representations of trigonometric polynomials on T^d.

``TrigPoly`` is a sparse map from frequency vectors to complex coefficients.
``Poly1D`` is a dense univariate coefficient vector, and ``SeparablePoly`` a
finite sum of tensor products of ``Poly1D`` factors; the kernels and Riesz
products live naturally in that form and can be normed on grids far larger
than memory would allow for a materialized sample array.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np
from scipy import fft as sfft
from scipy import sparse

from hcremez import _backend
from hcremez._config import PRUNE, ResourceLimitError, mem_budget
from hcremez.indexsets import IndexSet, key_bits, level, pack, pack_origin, unpack
from hcremez.measure import Grid, GridFunction, StreamStats, select_top

__all__ = [
    "Grid",
    "TrigPoly",
    "Poly1D",
    "SeparablePoly",
    "AliasingError",
    "SupportCapError",
    "evaluate_on_grid",
    "coefficients_from_grid",
    "convolve",
    "multiply",
    "random_trigpoly",
    "separable_reduce_on_grid",
]

SUPPORT_CAP = 20_000_000


class AliasingError(ValueError):
    """Grid too coarse to resolve the requested spectral support."""


class SupportCapError(ResourceLimitError):
    """A spectral product would exceed the configured support cap."""


def _prune(keys, coeffs, tol=PRUNE):
    keep = np.abs(coeffs) > tol
    return keys[keep], coeffs[keep]


class TrigPoly:
    """Sparse trigonometric polynomial ``sum_k c_k exp(i (k, x))``.

    Parameters
    ----------
    dim : int
    keys : array_like of shape (m, dim)
        Frequency vectors; duplicates are summed.
    coeffs : array_like of shape (m,)
    prune : float
        Coefficients with modulus at or below this are dropped.
    """

    __slots__ = ("dim", "keys", "coeffs", "_packed")

    def __init__(self, dim: int, keys, coeffs, prune: float = PRUNE):
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, dim)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if keys.shape[0] != coeffs.size:
            raise ValueError("keys and coefficients differ in length")
        packed = pack(keys)
        if packed.size:
            uniq, inv = np.unique(packed, return_inverse=True)
            if uniq.size != packed.size:
                re = np.bincount(inv, weights=coeffs.real, minlength=uniq.size)
                im = np.bincount(inv, weights=coeffs.imag, minlength=uniq.size)
                coeffs = re + 1j * im
            else:
                coeffs = coeffs[np.argsort(packed)]
            packed = uniq
        keep = np.abs(coeffs) > prune
        packed, coeffs = packed[keep], coeffs[keep]
        self.dim = int(dim)
        self._packed = packed
        self.keys = unpack(packed, dim)
        self.coeffs = np.ascontiguousarray(coeffs)
        for arr in (self._packed, self.keys, self.coeffs):
            arr.setflags(write=False)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_dict(cls, dim: int, mapping: Mapping) -> "TrigPoly":
        if not mapping:
            return cls.zero(dim)
        keys = np.array([np.atleast_1d(k) for k in mapping], dtype=np.int64).reshape(-1, dim)
        return cls(dim, keys, np.array(list(mapping.values()), dtype=np.complex128))

    @classmethod
    def zero(cls, dim: int) -> "TrigPoly":
        return cls(dim, np.empty((0, dim), np.int64), np.empty(0, np.complex128))

    @classmethod
    def constant(cls, dim: int, c: complex = 1.0) -> "TrigPoly":
        return cls(dim, np.zeros((1, dim), np.int64), [c])

    @classmethod
    def monomial(cls, k, c: complex = 1.0) -> "TrigPoly":
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        return cls(k.size, k[None, :], [c])

    @classmethod
    def from_packed(cls, dim, packed, coeffs) -> "TrigPoly":
        return cls(dim, unpack(packed, dim), coeffs)

    # -- queries -----------------------------------------------------------
    @property
    def packed(self) -> np.ndarray:
        return self._packed

    def __len__(self) -> int:
        return self.coeffs.size

    @property
    def support(self) -> IndexSet:
        return IndexSet(self.dim, self.keys, "support")

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    def max_degree(self) -> tuple:
        if self.is_zero():
            return (0,) * self.dim
        return tuple(int(v) for v in np.abs(self.keys).max(axis=0))

    def coefficient(self, k) -> complex:
        return complex(self.coefficients_at(np.atleast_1d(k)[None, :])[0])

    def coefficients_at(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, self.dim)
        out = np.zeros(keys.shape[0], dtype=np.complex128)
        if self.is_zero() or keys.shape[0] == 0:
            return out
        bound = (1 << (key_bits(self.dim) - 1)) - 1
        ok = np.all(np.abs(keys) < bound, axis=1)
        q = pack(keys[ok])
        pos = np.searchsorted(self._packed, q).clip(max=self._packed.size - 1)
        hit = self._packed[pos] == q
        vals = np.where(hit, self.coeffs[pos], 0)
        out[ok] = vals
        return out

    def items(self):
        for k, c in zip(self.keys, self.coeffs):
            yield tuple(int(v) for v in k), complex(c)

    def to_dict(self) -> dict:
        return dict(self.items())

    def __call__(self, x) -> np.ndarray:
        """Evaluate at arbitrary points ``x`` of shape (m, dim) by direct summation."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64)).reshape(-1, self.dim)
        out = np.empty(x.shape[0], dtype=np.complex128)
        kf = self.keys.astype(np.float64)
        step = max(1, (1 << 22) // max(len(self), 1))
        for i in range(0, x.shape[0], step):
            out[i:i + step] = np.exp(1j * (x[i:i + step] @ kf.T)) @ self.coeffs
        return out

    # -- arithmetic ----------------------------------------------------------
    def _combine(self, other, sign):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(self.dim, other)
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return TrigPoly(self.dim, np.vstack([self.keys, other.keys]),
                        np.concatenate([self.coeffs, sign * other.coeffs]))

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return TrigPoly(self.dim, self.keys, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return multiply(self, other)
        return TrigPoly(self.dim, self.keys, self.coeffs * complex(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, c):
        return TrigPoly(self.dim, self.keys, self.coeffs / complex(c))

    def conj(self) -> "TrigPoly":
        """Pointwise complex conjugate: ``c_k -> conj(c_{-k})``."""
        return TrigPoly(self.dim, -self.keys, np.conj(self.coeffs))

    def real_part(self) -> "TrigPoly":
        return (self + self.conj()) * 0.5

    def imag_part(self) -> "TrigPoly":
        return (self - self.conj()) * (-0.5j)

    def restrict(self, support: IndexSet) -> "TrigPoly":
        keep = support.contains(self.keys)
        return TrigPoly(self.dim, self.keys[keep], self.coeffs[keep])

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        diff = self - other
        return bool(diff.is_zero() or np.max(np.abs(diff.coeffs)) <= atol)

    def l2_norm(self) -> float:
        """Parseval value ``sqrt(sum |c_k|^2)``."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def mean(self) -> complex:
        return self.coefficient(np.zeros(self.dim, np.int64))

    # -- serialization -----------------------------------------------------
    def to_text(self) -> str:
        """Lines ``k_1 ... k_d re im`` in lexicographic order of ``k``."""
        lines = []
        for k, c in zip(self.keys, self.coeffs):
            lines.append(" ".join(str(int(v)) for v in k) + f" {float(c.real)!r} {float(c.imag)!r}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, dim: int | None = None) -> "TrigPoly":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows:
            if dim is None:
                raise ValueError("empty polynomial text needs an explicit dimension")
            return cls.zero(dim)
        width = {len(r) for r in rows}
        if len(width) != 1:
            raise ValueError("inconsistent row widths")
        d = width.pop() - 2
        if d < 1 or (dim is not None and d != dim):
            raise ValueError("row width does not match the dimension")
        keys = np.array([[int(v) for v in r[:d]] for r in rows], dtype=np.int64)
        coeffs = np.array([float(r[d]) + 1j * float(r[d + 1]) for r in rows])
        return cls(d, keys, coeffs)

    def __repr__(self):
        return f"TrigPoly(dim={self.dim}, terms={len(self)}, degree={self.max_degree()})"


# ---------------------------------------------------------------------------

def convolve(f: TrigPoly, K: TrigPoly) -> TrigPoly:
    """Normalized convolution ``(2 pi)^-d int f(u) K(x - u) du``: coefficientwise product."""
    if f.dim != K.dim:
        raise ValueError("dimension mismatch")
    common, i, j = np.intersect1d(f.packed, K.packed, assume_unique=True, return_indices=True)
    return TrigPoly.from_packed(f.dim, common, f.coeffs[i] * K.coeffs[j])


def multiply(f: TrigPoly, g: TrigPoly, cap: int = SUPPORT_CAP) -> TrigPoly:
    """Pointwise product; spectrally the convolution of the coefficient maps."""
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    d = f.dim
    if f.is_zero() or g.is_zero():
        return TrigPoly.zero(d)
    degs = [a + b for a, b in zip(f.max_degree(), g.max_degree())]
    if max(degs) >= (1 << (key_bits(d) - 1)) - 1:
        raise SupportCapError("product degree exceeds the packed key range")
    box = math.prod(2 * m + 1 for m in degs)
    if min(len(f) * len(g), box) > cap:
        raise SupportCapError(f"product support may reach {min(len(f) * len(g), box)} > cap {cap}")
    a, b = (f, g) if len(f) >= len(g) else (g, f)
    keys, vals = _backend.sparse_convolve(
        np.ascontiguousarray(a.packed), np.ascontiguousarray(a.coeffs),
        np.ascontiguousarray(b.packed), np.ascontiguousarray(b.coeffs),
        int(pack_origin(d)),
    )
    return TrigPoly.from_packed(d, keys, vals)


def random_trigpoly(support: IndexSet, rng: np.random.Generator, real: bool = False) -> TrigPoly:
    """Complex Gaussian coefficients on ``support`` (Hermitian-symmetrized when ``real``)."""
    m = len(support)
    c = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    f = TrigPoly(support.dim, support.members, c)
    if real:
        f = f.real_part()
    return f


# ---------------------------------------------------------------------------
# grid transforms

def _fold_dense(f: TrigPoly, sizes) -> np.ndarray:
    A = np.zeros(sizes, dtype=np.complex128)
    idx = tuple(np.mod(f.keys[:, j], sizes[j]) for j in range(f.dim))
    np.add.at(A, idx, f.coeffs)
    return A


def evaluate_on_grid(f, grid: Grid, *, powers: Iterable = (), topk: int = 0,
                     stream: bool | None = None, budget: int | None = None) -> GridFunction:
    """Sample ``f`` at every grid node.

    Sampling is exact at any grid size (frequencies fold modulo ``G_j``).
    When the sample array would exceed the memory budget the evaluation
    streams over row tiles and keeps only ``max |f|``, the power sums for
    ``powers`` and the ``topk`` largest values; ``stream=False`` turns that
    into a ``ResourceLimitError`` instead.
    """
    if isinstance(f, SeparablePoly):
        f = f.to_trigpoly()
    if f.dim != grid.dim:
        raise ValueError("dimension mismatch between polynomial and grid")
    budget = mem_budget() if budget is None else budget
    need = 16 * grid.total
    if stream is None:
        stream = need > budget
    if not stream:
        if need > budget:
            raise ResourceLimitError(f"grid needs {need} bytes > budget {budget}")
        A = _fold_dense(f, grid.sizes)
        vals = np.fft.ifftn(A) * grid.total if f.dim > 0 else A
        return GridFunction(grid, vals)
    return _stream_evaluate(f, grid, tuple(float(p) for p in powers), int(topk), budget)


def _stream_evaluate(f: TrigPoly, grid: Grid, powers, topk, budget):
    """Row-tiled evaluation retaining reductions only.

    Per tile of first-axis nodes, the partial sums over ``k_1`` are a sparse
    product ``C^T E`` (coefficients by distinct ``k_1`` residue), followed by
    an inverse FFT over the remaining axes.
    """
    sizes = grid.sizes
    keys = f.keys
    if f.dim == 1:
        sizes = (1,) + sizes
        keys = np.hstack([np.zeros((len(f), 1), np.int64), keys])
    g0 = sizes[0]
    tail_sizes = sizes[1:]
    rest = int(np.prod(tail_sizes))
    r0 = np.mod(keys[:, 0], g0)
    tail_idx = np.zeros(len(f), dtype=np.int64)
    for j, g in enumerate(tail_sizes):
        tail_idx = tail_idx * g + np.mod(keys[:, j + 1], g)
    rows_u, r_inv = np.unique(r0, return_inverse=True)
    C = sparse.csr_matrix((f.coeffs, (tail_idx, r_inv)), shape=(rest, rows_u.size))
    C.sum_duplicates()
    rows = int(max(1, min(g0, (1 << 22) // max(rest, 1), budget // (64 * max(rest, 1)))))
    stats = StreamStats(power_sums={p: 0.0 for p in powers})
    tv = np.empty(0)
    ti = np.empty(0, np.int64)
    for t0 in range(0, g0, rows):
        t = np.arange(t0, min(g0, t0 + rows))
        E = np.exp((2j * np.pi / g0) * np.outer(rows_u, t))
        D = np.asarray(C @ E).T.reshape((t.size,) + tail_sizes)
        tile = sfft.ifftn(D, axes=tuple(range(1, D.ndim)), overwrite_x=True) * rest if D.ndim > 1 else D
        a = np.abs(tile).ravel()
        if a.size:
            stats.max_abs = max(stats.max_abs, float(a.max()))
        for p in powers:
            if not math.isinf(p):
                stats.power_sums[p] += float(np.sum(a ** p))
        if topk:
            idx = t0 * rest + np.arange(a.size, dtype=np.int64)
            sel = select_top(a, idx, topk)
            tv = np.concatenate([tv, a[sel]])
            ti = np.concatenate([ti, idx[sel]])
            keep = select_top(tv, ti, topk)
            tv, ti = tv[keep], ti[keep]
    if topk:
        stats.top_values, stats.top_index = tv, ti
    return GridFunction(grid, None, stats)


def coefficients_from_grid(samples: GridFunction, support: IndexSet) -> TrigPoly:
    """Invert sampling by discrete orthogonality, restricted to ``support``."""
    if not samples.materialized:
        raise ValueError("coefficient recovery needs materialized samples")
    grid = samples.grid
    if support.dim != grid.dim:
        raise ValueError("dimension mismatch")
    degs = support.max_degree()
    if not grid.is_exact_for(degs):
        raise AliasingError(f"grid {grid.sizes} too small for support degrees {degs}")
    A = np.fft.fftn(samples.values) / grid.total
    idx = tuple(np.mod(support.members[:, j], grid.sizes[j]) for j in range(grid.dim))
    return TrigPoly(grid.dim, support.members, A[idx])


# ---------------------------------------------------------------------------
# dense univariate factors and sums of tensor products

class Poly1D:
    """Dense univariate polynomial: ``coeffs[i]`` multiplies ``exp(i (lo + i) x)``."""

    __slots__ = ("coeffs", "lo")

    def __init__(self, coeffs, lo: int):
        c = np.asarray(coeffs)
        if not np.iscomplexobj(c):
            c = c.astype(np.float64)
        nz = np.flatnonzero(np.abs(c) > PRUNE)
        if nz.size == 0:
            c, lo = np.zeros(1, dtype=c.dtype), 0
        else:
            lo = int(lo) + int(nz[0])
            c = c[nz[0]: nz[-1] + 1]
        c.setflags(write=False)
        self.coeffs = c
        self.lo = int(lo)

    @classmethod
    def symmetric(cls, half) -> "Poly1D":
        """Even real polynomial from coefficients at ``k = 0, 1, ..., m``."""
        half = np.asarray(half, dtype=np.float64)
        return cls(np.concatenate([half[:0:-1], half]), -(half.size - 1))

    @property
    def hi(self) -> int:
        return self.lo + self.coeffs.size - 1

    @property
    def degree(self) -> int:
        return max(abs(self.lo), abs(self.hi))

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0

    def is_even_real(self) -> bool:
        return (not np.iscomplexobj(self.coeffs) and self.lo == -self.hi
                and np.array_equal(self.coeffs, self.coeffs[::-1]))

    def coefficients_at(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        pos = k - self.lo
        ok = (pos >= 0) & (pos < self.coeffs.size)
        out = np.zeros(k.shape, dtype=self.coeffs.dtype)
        out[ok] = self.coeffs[pos[ok]]
        return out

    def min_level(self) -> int:
        """Smallest dyadic level among nonzero coefficients."""
        ks = self.lo + np.flatnonzero(self.coeffs != 0)
        return int(level(ks).min()) if ks.size else 0

    def values_on(self, G: int) -> np.ndarray:
        """Samples at ``2*pi*t/G``, ``t = 0..G-1`` (exact via folding)."""
        A = np.zeros(G, dtype=np.complex128)
        np.add.at(A, np.mod(np.arange(self.lo, self.hi + 1), G), self.coeffs)
        v = np.fft.ifft(A) * G
        return v.real.copy() if self.is_even_real() else v

    def __mul__(self, other):
        if isinstance(other, Poly1D):
            return Poly1D(np.convolve(self.coeffs, other.coeffs), self.lo + other.lo)
        return Poly1D(self.coeffs * other, self.lo)

    __rmul__ = __mul__

    def __add__(self, other: "Poly1D") -> "Poly1D":
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        dt = np.result_type(self.coeffs, other.coeffs)
        c = np.zeros(hi - lo + 1, dtype=dt)
        c[self.lo - lo: self.hi - lo + 1] += self.coeffs
        c[other.lo - lo: other.hi - lo + 1] += other.coeffs
        return Poly1D(c, lo)

    def __neg__(self):
        return Poly1D(-self.coeffs, self.lo)

    def __sub__(self, other):
        return self + (-other)

    def to_trigpoly(self) -> TrigPoly:
        ks = np.arange(self.lo, self.hi + 1)
        return TrigPoly(1, ks[:, None], self.coeffs)

    def __repr__(self):
        return f"Poly1D(lo={self.lo}, hi={self.hi})"


class SeparablePoly:
    """``sum_r w_r * prod_j u_{r,j}(x_j)`` with univariate ``Poly1D`` factors."""

    def __init__(self, dim: int, terms: Iterable):
        terms = [(complex(w), tuple(fs)) for w, fs in terms]
        for _, fs in terms:
            if len(fs) != dim:
                raise ValueError("every term needs one factor per dimension")
        self.dim = int(dim)
        self.terms = [(w, fs) for w, fs in terms if w != 0 and not any(f.is_zero() for f in fs)]

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "SeparablePoly") -> "SeparablePoly":
        return SeparablePoly(self.dim, self.terms + other.terms)

    def __neg__(self):
        return SeparablePoly(self.dim, [(-w, fs) for w, fs in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SeparablePoly":
        return SeparablePoly(self.dim, [(w * c, fs) for w, fs in self.terms])

    def max_degree(self) -> tuple:
        if not self.terms:
            return (0,) * self.dim
        return tuple(max(fs[j].degree for _, fs in self.terms) for j in range(self.dim))

    def is_even_real(self) -> bool:
        return all(w.imag == 0 and all(f.is_even_real() for f in fs) for w, fs in self.terms)

    def coefficients_at(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, self.dim)
        out = np.zeros(keys.shape[0], dtype=np.complex128)
        for w, fs in self.terms:
            part = np.full(keys.shape[0], w, dtype=np.complex128)
            for j, fac in enumerate(fs):
                part *= fac.coefficients_at(keys[:, j])
            out += part
        return out

    def vanishes_on_step_cross(self, n: int) -> bool:
        """Exact test that every term has no frequency in ``Q_n``.

        A tensor term ``u(x1) v(x2)`` meets ``Q_n`` iff the smallest levels
        of its factors sum to at most ``n``; this is sufficient for the
        whole sum to vanish on ``Q_n``.
        """
        return all(sum(f.min_level() for f in fs) > n for _, fs in self.terms)

    def to_trigpoly(self, cap: int = SUPPORT_CAP) -> TrigPoly:
        parts_k, parts_c = [], []
        total = 0
        for w, fs in self.terms:
            axes = [np.arange(f.lo, f.hi + 1) for f in fs]
            size = math.prod(a.size for a in axes)
            total += size
            if total > cap:
                raise SupportCapError(f"materializing needs more than {cap} coefficients")
            mesh = np.meshgrid(*axes, indexing="ij")
            val = w
            for j, f in enumerate(fs):
                shape = [1] * self.dim
                shape[j] = -1
                val = val * f.coeffs.reshape(shape)
            parts_k.append(np.stack([m.ravel() for m in mesh], axis=1))
            parts_c.append(np.broadcast_to(val, mesh[0].shape).ravel())
        if not parts_k:
            return TrigPoly.zero(self.dim)
        return TrigPoly(self.dim, np.vstack(parts_k), np.concatenate(parts_c))

    def factor_values(self, grid: Grid, half: bool = False):
        """Per-axis ``(terms, nodes)`` sample matrices; weights folded into axis 0."""
        mats = []
        for j in range(self.dim):
            G = grid.sizes[j]
            cols = []
            for w, fs in self.terms:
                v = fs[j].values_on(G)
                if half:
                    v = v[: G // 2 + 1]
                cols.append(v * w if j == 0 else v)
            mats.append(np.array(cols))
        if mats and all(not np.iscomplexobj(m) or not np.any(m.imag) for m in mats):
            mats = [np.real(m) for m in mats]
        return mats

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64)).reshape(-1, self.dim)
        out = np.zeros(x.shape[0], dtype=np.complex128)
        for w, fs in self.terms:
            part = np.full(x.shape[0], w, dtype=np.complex128)
            for j, f in enumerate(fs):
                ks = np.arange(f.lo, f.hi + 1)
                part *= np.exp(1j * np.outer(x[:, j], ks)) @ f.coeffs
            out += part
        return out


def _half_weights(G: int) -> np.ndarray:
    """Weights folding ``t`` and ``G - t`` onto ``t = 0..G//2``."""
    w = np.full(G // 2 + 1, 2.0)
    w[0] = 1.0
    if G % 2 == 0:
        w[-1] = 1.0
    return w


def separable_reduce_on_grid(sp: SeparablePoly, grid: Grid, powers: Iterable = (1.0, 2.0)) -> GridFunction:
    """Max and power sums of a separable polynomial over every grid node, without storing samples.

    Even real sums are reduced over the quarter torus with folding weights.
    """
    powers = tuple(float(p) for p in powers)
    if sp.dim != grid.dim:
        raise ValueError("dimension mismatch")
    stats = StreamStats(power_sums={p: 0.0 for p in powers})
    if not sp.terms:
        return GridFunction(grid, None, stats)
    if sp.dim == 1:
        a = evaluate_on_grid(sp.to_trigpoly(), grid, stream=False).abs_flat
        stats.max_abs = float(a.max())
        for p in powers:
            stats.power_sums[p] = float(np.sum(a ** p))
        return GridFunction(grid, None, stats)
    if sp.dim != 2:
        g = evaluate_on_grid(sp.to_trigpoly(), grid, powers=powers, topk=0)
        if g.materialized:
            a = g.abs_flat
            stats.max_abs = float(a.max())
            for p in powers:
                stats.power_sums[p] = float(np.sum(a ** p))
            return GridFunction(grid, None, stats)
        return g
    half = sp.is_even_real()
    U, W = sp.factor_values(grid, half=half)
    if half:
        wr, wc = _half_weights(grid.sizes[0]), _half_weights(grid.sizes[1])
    else:
        wr, wc = np.ones(grid.sizes[0]), np.ones(grid.sizes[1])
    best, sums = _backend.separable_reduce(
        np.ascontiguousarray(U), np.ascontiguousarray(W), wr, wc,
        np.array([p for p in powers if not math.isinf(p)], dtype=np.float64),
    )
    stats.max_abs = float(best)
    finite = [p for p in powers if not math.isinf(p)]
    for p, s in zip(finite, sums):
        stats.power_sums[p] = float(s)
    return GridFunction(grid, None, stats)
