"""Pure-NumPy fallback for the hot spectral-sum kernels.

Same signatures as the compiled extension ``_kernels``.  Mode functions
are separable products of sines/cosines with integer frequency
multiples, so each batch builds per-dimension trig tables once and
gathers them per mode; points are processed in chunks to bound the
(P, J) temporaries.
"""

from __future__ import annotations

import numpy as np

COMPILED = False
_CHUNK = 8192


def _tables(base, m_idx, x):
    """Trig tables (sin, cos) with entries trig(m * base_d * x_d)."""
    mmax = m_idx.max(axis=0)
    sin_t, cos_t = [], []
    for d in range(x.shape[1]):
        theta = np.outer(x[:, d] * base[d], np.arange(mmax[d] + 1))
        sin_t.append(np.sin(theta))
        cos_t.append(np.cos(theta))
    return sin_t, cos_t


def _bands(tabs, m_idx):
    return [tabs[d][:, m_idx[:, d]] for d in range(len(tabs))]


def _products(bands, amps, p):
    """Full mode product and the n leave-one-out products."""
    n = len(bands)
    full = np.broadcast_to(amps, (p, len(amps))).copy()
    for b in bands:
        full *= b
    louts = []
    for d in range(n):
        e = np.broadcast_to(amps, (p, len(amps))).copy()
        for dd in range(n):
            if dd != d:
                e *= bands[dd]
        louts.append(e)
    return full, louts


def basis_matrix(base, m_idx, amps, kind, x):
    """Matrix of mode values e_j(x_p), shape (P, J)."""
    base = np.asarray(base, float)
    m_idx = np.asarray(m_idx)
    amps = np.asarray(amps, float)
    x = np.atleast_2d(np.asarray(x, float))
    sin_t, cos_t = _tables(base, m_idx, x)
    bands = _bands(sin_t if kind == 0 else cos_t, m_idx)
    full, _ = _products(bands, amps, x.shape[0])
    return full


def s_pairs(base, m_idx, amps, kind, x, y):
    """sum_j e_j(x_p) e_j(y_p) with e_j = amps_j * prod_d trig."""
    base = np.asarray(base, float)
    m_idx = np.asarray(m_idx)
    amps = np.asarray(amps, float)
    x = np.atleast_2d(np.asarray(x, float))
    y = np.atleast_2d(np.asarray(y, float))
    out = np.empty(x.shape[0])
    for i in range(0, x.shape[0], _CHUNK):
        sl = slice(i, i + _CHUNK)
        ex = basis_matrix(base, m_idx, amps, kind, x[sl])
        ey = basis_matrix(base, m_idx, amps, kind, y[sl])
        out[sl] = np.einsum("pj,pj->p", ex, ey)
    return out


def s_pairs_grad(base, m_idx, amps, kind, x, y):
    """(S, dS/dx, dS/dy) for the paired spectral sum."""
    base = np.asarray(base, float)
    m_idx = np.asarray(m_idx)
    amps = np.asarray(amps, float)
    x = np.atleast_2d(np.asarray(x, float))
    y = np.atleast_2d(np.asarray(y, float))
    p, n = x.shape
    s = np.empty(p)
    gx = np.empty((p, n))
    gy = np.empty((p, n))
    freq = m_idx * base
    for i in range(0, p, _CHUNK):
        sl = slice(i, i + _CHUNK)
        pc = x[sl].shape[0]
        sx, cx = _tables(base, m_idx, x[sl])
        sy, cy = _tables(base, m_idx, y[sl])
        bx = _bands(sx if kind == 0 else cx, m_idx)
        by = _bands(sy if kind == 0 else cy, m_idx)
        dbx = _bands(cx, m_idx) if kind == 0 else [-b for b in _bands(sx, m_idx)]
        dby = _bands(cy, m_idx) if kind == 0 else [-b for b in _bands(sy, m_idx)]
        ex, lx = _products(bx, amps, pc)
        ey, ly = _products(by, amps, pc)
        s[sl] = np.einsum("pj,pj->p", ex, ey)
        for d in range(n):
            dex = lx[d] * dbx[d] * freq[:, d]
            dey = ly[d] * dby[d] * freq[:, d]
            gx[sl, d] = np.einsum("pj,pj->p", dex, ey)
            gy[sl, d] = np.einsum("pj,pj->p", ex, dey)
    return s, gx, gy


def cos_pairs(kvecs, weights, d):
    """sum_j w_j cos(k_j . d_p)."""
    kvecs = np.asarray(kvecs, float)
    weights = np.asarray(weights, float)
    d = np.atleast_2d(np.asarray(d, float))
    out = np.empty(d.shape[0])
    for i in range(0, d.shape[0], _CHUNK):
        sl = slice(i, i + _CHUNK)
        out[sl] = np.cos(d[sl] @ kvecs.T) @ weights
    return out


def cos_pairs_grad(kvecs, weights, d):
    """(S, dS/dd) for the cosine-sum kernel."""
    kvecs = np.asarray(kvecs, float)
    weights = np.asarray(weights, float)
    d = np.atleast_2d(np.asarray(d, float))
    p, n = d.shape
    s = np.empty(p)
    g = np.empty((p, n))
    for i in range(0, p, _CHUNK):
        sl = slice(i, i + _CHUNK)
        phase = d[sl] @ kvecs.T
        s[sl] = np.cos(phase) @ weights
        g[sl] = -(np.sin(phase) * weights) @ kvecs
    return s, g
