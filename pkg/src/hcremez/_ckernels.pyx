# distutils: language = c++
"""Compiled inner loops.

Every function here has a drop-in twin in ``_pykernels`` with the same
signature and the same results up to floating point summation order.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


def sparse_convolve(const long long[::1] ka, const double complex[::1] va,
                    const long long[::1] kb, const double complex[::1] vb,
                    long long base):
    """Accumulate ``va[i] * vb[j]`` at packed key ``ka[i] + kb[j] - base``.

    Returns unsorted ``(keys, values)`` with unique keys.
    """
    cdef Py_ssize_t na = ka.shape[0], nb = kb.shape[0]
    cdef Py_ssize_t i, j, slot
    cdef long long key, ki
    cdef double complex ai
    cdef unordered_map[long long, Py_ssize_t] index
    cdef unordered_map[long long, Py_ssize_t].iterator it
    cdef vector[long long] keys
    cdef vector[double] re
    cdef vector[double] im
    cdef double complex prod
    index.reserve(min(na * nb, <Py_ssize_t>(na + nb) * 64))
    for i in range(na):
        ki = ka[i] - base
        ai = va[i]
        for j in range(nb):
            key = ki + kb[j]
            prod = ai * vb[j]
            it = index.find(key)
            if it == index.end():
                index[key] = keys.size()
                keys.push_back(key)
                re.push_back(prod.real)
                im.push_back(prod.imag)
            else:
                slot = index[key]
                re[slot] += prod.real
                im[slot] += prod.imag
    cdef Py_ssize_t m = keys.size()
    out_k = np.empty(m, dtype=np.int64)
    out_v = np.empty(m, dtype=np.complex128)
    cdef long long[::1] ok = out_k
    cdef double complex[::1] ov = out_v
    for i in range(m):
        ok[i] = keys[i]
        ov[i] = re[i] + 1j * im[i]
    return out_k, out_v


DEF TILE_ELEMS = 262144


cdef void _gemm_rows(const double[:, ::1] Ut, const double[:, ::1] W, Py_ssize_t i0, Py_ssize_t rows,
                     double* out) noexcept nogil:
    """``out[(i - i0) * g2 + j] = sum_t Ut[i, t] * W[t, j]`` for ``i0 <= i < i0 + rows``."""
    # row-major (rows x g2) = (rows x r)(r x g2) is column-major (g2 x rows) = (g2 x r)(r x rows)
    cdef int m = <int>W.shape[1], n = <int>rows, k = <int>W.shape[0]
    cdef int lda = m, ldb = k, ldc = m
    cdef double one = 1.0, zero = 0.0
    cdef char trans = b"N"
    dgemm(&trans, &trans, &m, &n, &k, &one, <double*>&W[0, 0], &lda,
          <double*>&Ut[i0, 0], &ldb, &zero, out, &ldc)


def separable_reduce_real(const double[:, ::1] U, const double[:, ::1] W,
                          const double[:, ::1] U2, const double[:, ::1] W2,
                          const double[::1] wrow, const double[::1] wcol,
                          const double[::1] powers, bint has_imag):
    """Row tiles of ``F`` from one BLAS call each, reduced in a single fused pass."""
    cdef Py_ssize_t g1 = U.shape[1], g2 = W.shape[1]
    cdef Py_ssize_t npow = powers.shape[0]
    cdef Py_ssize_t rows = max(1, TILE_ELEMS // max(g2, 1))
    cdef Py_ssize_t i, i0, nr, j, q
    cdef double best = 0.0, s, p, v
    cdef double* row
    Ut_arr = np.ascontiguousarray(np.asarray(U).T)
    U2t_arr = np.ascontiguousarray(np.asarray(U2).T)
    re_arr = np.empty(rows * g2, dtype=np.float64)
    im_arr = np.empty(rows * g2 if has_imag else 1, dtype=np.float64)
    tot_arr = np.zeros(npow, dtype=np.float64)
    cdef double[:, ::1] Ut = Ut_arr
    cdef double[:, ::1] U2t = U2t_arr
    cdef double[::1] buf = re_arr
    cdef double[::1] ibuf = im_arr
    cdef double[::1] tot = tot_arr
    if g1 == 0 or g2 == 0:
        return 0.0, tot_arr
    i0 = 0
    with nogil:
        while i0 < g1:
            nr = min(rows, g1 - i0)
            _gemm_rows(Ut, W, i0, nr, &buf[0])
            if has_imag:
                _gemm_rows(U2t, W2, i0, nr, &ibuf[0])
                for j in range(nr * g2):
                    buf[j] = sqrt(buf[j] * buf[j] + ibuf[j] * ibuf[j])
            else:
                for j in range(nr * g2):
                    buf[j] = fabs(buf[j])
            for j in range(nr * g2):
                v = buf[j]
                if v > best:
                    best = v
            for i in range(nr):
                row = &buf[i * g2]
                for q in range(npow):
                    p = powers[q]
                    s = 0.0
                    if p == 1.0:
                        for j in range(g2):
                            s += wcol[j] * row[j]
                    elif p == 2.0:
                        for j in range(g2):
                            s += wcol[j] * row[j] * row[j]
                    elif p == 0.5:
                        for j in range(g2):
                            s += wcol[j] * sqrt(row[j])
                    else:
                        for j in range(g2):
                            s += wcol[j] * pow(row[j], p)
                    tot[q] += wrow[i0 + i] * s
            i0 += nr
    return best, tot_arr


def separable_reduce(U, W, wrow, wcol, powers):
    """Reductions of ``F[i, j] = sum_r U[r, i] * W[r, j]`` without storing F.

    Returns ``(max |F|, sums)`` with
    ``sums[q] = sum_ij wrow[i] * wcol[j] * |F[i, j]| ** powers[q]``.
    """
    U = np.asarray(U)
    W = np.asarray(W)
    if U.shape[0] != W.shape[0]:
        raise ValueError("factor matrices disagree on the number of terms")
    wrow = np.ascontiguousarray(wrow, dtype=np.float64)
    wcol = np.ascontiguousarray(wcol, dtype=np.float64)
    powers = np.ascontiguousarray(powers, dtype=np.float64)
    if np.iscomplexobj(U) or np.iscomplexobj(W):
        U = U.astype(np.complex128)
        W = W.astype(np.complex128)
        # Re F = [Ur; -Ui]^T [Wr; Wi],  Im F = [Ur; Ui]^T [Wi; Wr]
        A1 = np.ascontiguousarray(np.vstack([U.real, -U.imag]))
        B1 = np.ascontiguousarray(np.vstack([W.real, W.imag]))
        A2 = np.ascontiguousarray(np.vstack([U.real, U.imag]))
        B2 = np.ascontiguousarray(np.vstack([W.imag, W.real]))
        return separable_reduce_real(A1, B1, A2, B2, wrow, wcol, powers, True)
    A = np.ascontiguousarray(U, dtype=np.float64)
    B = np.ascontiguousarray(W, dtype=np.float64)
    return separable_reduce_real(A, B, A, B, wrow, wcol, powers, False)
