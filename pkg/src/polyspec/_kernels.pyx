# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled spectral-sum kernels.

Mirrors ``_kernels_py``; the mode sums are fused so no (P, J) temporary
is formed, and the per-point trig tables use the multiple-angle
recurrence trig(m t) = 2 cos(t) trig((m-1) t) - trig((m-2) t).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

COMPILED = True


cdef inline void _fill_tables(double theta, double* st, double* ct, int mmax) noexcept nogil:
    cdef double c2 = 2.0 * cos(theta)
    cdef int m
    st[0] = 0.0
    ct[0] = 1.0
    if mmax >= 1:
        st[1] = sin(theta)
        ct[1] = cos(theta)
    for m in range(2, mmax + 1):
        st[m] = c2 * st[m - 1] - st[m - 2]
        ct[m] = c2 * ct[m - 1] - ct[m - 2]


def basis_matrix(base, m_idx, amps, int kind, x):
    cdef double[::1] base_v = np.ascontiguousarray(base, dtype=np.float64)
    cdef int[:, ::1] m_v = np.ascontiguousarray(m_idx, dtype=np.int32)
    cdef double[::1] a_v = np.ascontiguousarray(amps, dtype=np.float64)
    cdef double[:, ::1] x_v = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
    cdef Py_ssize_t p = x_v.shape[0], n = x_v.shape[1], j_n = m_v.shape[0]
    cdef int mmax = 0
    cdef Py_ssize_t i, j, d
    for j in range(j_n):
        for d in range(n):
            if m_v[j, d] > mmax:
                mmax = m_v[j, d]
    out_arr = np.empty((p, j_n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    tab_arr = np.empty((n, 2, mmax + 1), dtype=np.float64)
    cdef double[:, :, ::1] tab = tab_arr
    cdef double acc
    with nogil:
        for i in range(p):
            for d in range(n):
                _fill_tables(base_v[d] * x_v[i, d], &tab[d, 0, 0], &tab[d, 1, 0], mmax)
            for j in range(j_n):
                acc = a_v[j]
                for d in range(n):
                    acc *= tab[d, kind, m_v[j, d]]
                out[i, j] = acc
    return out_arr


def s_pairs(base, m_idx, amps, int kind, x, y):
    cdef double[::1] base_v = np.ascontiguousarray(base, dtype=np.float64)
    cdef int[:, ::1] m_v = np.ascontiguousarray(m_idx, dtype=np.int32)
    cdef double[::1] a_v = np.ascontiguousarray(amps, dtype=np.float64)
    cdef double[:, ::1] x_v = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
    cdef double[:, ::1] y_v = np.ascontiguousarray(np.atleast_2d(y), dtype=np.float64)
    cdef Py_ssize_t p = x_v.shape[0], n = x_v.shape[1], j_n = m_v.shape[0]
    cdef int mmax = 0
    cdef Py_ssize_t i, j, d
    for j in range(j_n):
        for d in range(n):
            if m_v[j, d] > mmax:
                mmax = m_v[j, d]
    out_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] out = out_arr
    tabx_arr = np.empty((n, 2, mmax + 1), dtype=np.float64)
    taby_arr = np.empty((n, 2, mmax + 1), dtype=np.float64)
    cdef double[:, :, ::1] tabx = tabx_arr
    cdef double[:, :, ::1] taby = taby_arr
    cdef double acc, term
    with nogil:
        for i in range(p):
            for d in range(n):
                _fill_tables(base_v[d] * x_v[i, d], &tabx[d, 0, 0], &tabx[d, 1, 0], mmax)
                _fill_tables(base_v[d] * y_v[i, d], &taby[d, 0, 0], &taby[d, 1, 0], mmax)
            acc = 0.0
            for j in range(j_n):
                term = a_v[j] * a_v[j]
                for d in range(n):
                    term *= tabx[d, kind, m_v[j, d]] * taby[d, kind, m_v[j, d]]
                acc += term
            out[i] = acc
    return out_arr


def s_pairs_grad(base, m_idx, amps, int kind, x, y):
    cdef double[::1] base_v = np.ascontiguousarray(base, dtype=np.float64)
    cdef int[:, ::1] m_v = np.ascontiguousarray(m_idx, dtype=np.int32)
    cdef double[::1] a_v = np.ascontiguousarray(amps, dtype=np.float64)
    cdef double[:, ::1] x_v = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
    cdef double[:, ::1] y_v = np.ascontiguousarray(np.atleast_2d(y), dtype=np.float64)
    cdef Py_ssize_t p = x_v.shape[0], n = x_v.shape[1], j_n = m_v.shape[0]
    cdef int mmax = 0
    cdef Py_ssize_t i, j, d, dd
    for j in range(j_n):
        for d in range(n):
            if m_v[j, d] > mmax:
                mmax = m_v[j, d]
    s_arr = np.zeros(p, dtype=np.float64)
    gx_arr = np.zeros((p, n), dtype=np.float64)
    gy_arr = np.zeros((p, n), dtype=np.float64)
    cdef double[::1] s = s_arr
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gy = gy_arr
    tabx_arr = np.empty((n, 2, mmax + 1), dtype=np.float64)
    taby_arr = np.empty((n, 2, mmax + 1), dtype=np.float64)
    cdef double[:, :, ::1] tabx = tabx_arr
    cdef double[:, :, ::1] taby = taby_arr
    cdef double ex, ey, dex, dey, amp2, bxd, byd, dbx, dby, freq
    cdef double sacc
    cdef int mj
    with nogil:
        for i in range(p):
            for d in range(n):
                _fill_tables(base_v[d] * x_v[i, d], &tabx[d, 0, 0], &tabx[d, 1, 0], mmax)
                _fill_tables(base_v[d] * y_v[i, d], &taby[d, 0, 0], &taby[d, 1, 0], mmax)
            for j in range(j_n):
                amp2 = a_v[j] * a_v[j]
                ex = 1.0
                ey = 1.0
                for d in range(n):
                    mj = m_v[j, d]
                    ex *= tabx[d, kind, mj]
                    ey *= taby[d, kind, mj]
                s[i] += amp2 * ex * ey
                for d in range(n):
                    mj = m_v[j, d]
                    freq = base_v[d] * mj
                    bxd = 1.0
                    byd = 1.0
                    for dd in range(n):
                        if dd != d:
                            bxd *= tabx[dd, kind, m_v[j, dd]]
                            byd *= taby[dd, kind, m_v[j, dd]]
                    if kind == 0:
                        dbx = tabx[d, 1, mj]
                        dby = taby[d, 1, mj]
                    else:
                        dbx = -tabx[d, 0, mj]
                        dby = -taby[d, 0, mj]
                    gx[i, d] += amp2 * freq * dbx * bxd * ey
                    gy[i, d] += amp2 * freq * dby * byd * ex
    return s_arr, gx_arr, gy_arr


def cos_pairs(kvecs, weights, dpts):
    cdef double[:, ::1] k_v = np.ascontiguousarray(kvecs, dtype=np.float64)
    cdef double[::1] w_v = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] d_v = np.ascontiguousarray(np.atleast_2d(dpts), dtype=np.float64)
    cdef Py_ssize_t p = d_v.shape[0], n = d_v.shape[1], j_n = k_v.shape[0]
    cdef Py_ssize_t i, j, d
    out_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, phase
    with nogil:
        for i in range(p):
            acc = 0.0
            for j in range(j_n):
                phase = 0.0
                for d in range(n):
                    phase += k_v[j, d] * d_v[i, d]
                acc += w_v[j] * cos(phase)
            out[i] = acc
    return out_arr


def cos_pairs_grad(kvecs, weights, dpts):
    cdef double[:, ::1] k_v = np.ascontiguousarray(kvecs, dtype=np.float64)
    cdef double[::1] w_v = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] d_v = np.ascontiguousarray(np.atleast_2d(dpts), dtype=np.float64)
    cdef Py_ssize_t p = d_v.shape[0], n = d_v.shape[1], j_n = k_v.shape[0]
    cdef Py_ssize_t i, j, d
    s_arr = np.zeros(p, dtype=np.float64)
    g_arr = np.zeros((p, n), dtype=np.float64)
    cdef double[::1] s = s_arr
    cdef double[:, ::1] g = g_arr
    cdef double phase, ws
    with nogil:
        for i in range(p):
            for j in range(j_n):
                phase = 0.0
                for d in range(n):
                    phase += k_v[j, d] * d_v[i, d]
                s[i] += w_v[j] * cos(phase)
                ws = w_v[j] * sin(phase)
                for d in range(n):
                    g[i, d] -= ws * k_v[j, d]
    return s_arr, g_arr
