"""Pure numpy twins of the compiled kernels in ``_ckernels.pyx``."""

from __future__ import annotations

import numpy as np

# Max number of pairwise products materialized per chunk.
_CHUNK_PAIRS = 1 << 22
# Rows per tile in separable_reduce.
_TILE_ELEMS = 1 << 22


def sparse_convolve(ka, va, kb, vb, base):
    """Accumulate ``va[i] * vb[j]`` at packed key ``ka[i] + kb[j] - base``."""
    ka = np.asarray(ka, dtype=np.int64)
    kb = np.asarray(kb, dtype=np.int64)
    va = np.asarray(va, dtype=np.complex128)
    vb = np.asarray(vb, dtype=np.complex128)
    if ka.size == 0 or kb.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.complex128)
    step = max(1, _CHUNK_PAIRS // kb.size)
    parts_k, parts_v = [], []
    for start in range(0, ka.size, step):
        keys = (ka[start:start + step, None] - base) + kb[None, :]
        vals = va[start:start + step, None] * vb[None, :]
        uk, inv = np.unique(keys.ravel(), return_inverse=True)
        parts_k.append(uk)
        parts_v.append(_segment_sum(inv, vals.ravel(), uk.size))
    if len(parts_k) == 1:
        return parts_k[0], parts_v[0]
    keys = np.concatenate(parts_k)
    uk, inv = np.unique(keys, return_inverse=True)
    return uk, _segment_sum(inv, np.concatenate(parts_v), uk.size)


def _segment_sum(inv, vals, n):
    re = np.bincount(inv, weights=vals.real, minlength=n)
    im = np.bincount(inv, weights=vals.imag, minlength=n)
    return re + 1j * im


def separable_reduce(U, W, wrow, wcol, powers):
    """Reductions of ``F[i, j] = sum_r U[r, i] * W[r, j]`` without storing F."""
    U = np.asarray(U)
    W = np.asarray(W)
    if U.shape[0] != W.shape[0]:
        raise ValueError("factor matrices disagree on the number of terms")
    powers = np.asarray(powers, dtype=np.float64)
    wrow = np.asarray(wrow, dtype=np.float64)
    wcol = np.asarray(wcol, dtype=np.float64)
    g1, g2 = U.shape[1], W.shape[1]
    rows = max(1, _TILE_ELEMS // max(g2, 1))
    best = 0.0
    tot = np.zeros(powers.size)
    for i0 in range(0, g1, rows):
        tile = np.abs(U[:, i0:i0 + rows].T @ W)
        if tile.size:
            best = max(best, float(tile.max()))
        wr = wrow[i0:i0 + rows]
        for q, p in enumerate(powers):
            tp = tile if p == 1.0 else tile * tile if p == 2.0 else tile ** p
            tot[q] += wr @ (tp @ wcol)
    return best, tot
