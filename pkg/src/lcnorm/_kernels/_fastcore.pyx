# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled hot kernels: integral-table build, grouped box sums, and the
direct-summation window statistics used as the benchmark comparison path.

Contracts match ``_pycore``; table builds use Kahan-compensated running sums
so inclusion-exclusion cancellation stays at a few ulp.
"""

import numpy as np

cimport numpy as cnp
from cython cimport floating
from cython.parallel cimport prange
from libc.math cimport sqrt
from openmp cimport omp_get_max_threads

cnp.import_array()

ctypedef cnp.int64_t idx_t


def build_table(double[:, :, ::1] src):
    """(C, H, W) float64 source -> (C+1, H+1, W+1) inclusive prefix-sum table."""
    cdef Py_ssize_t C = src.shape[0], H = src.shape[1], W = src.shape[2]
    out_arr = np.zeros((C + 1, H + 1, W + 1), dtype=np.float64)
    cdef double[:, :, ::1] t = out_arr
    cdef double[:, ::1] compp = np.zeros((H + 1, W + 1), dtype=np.float64)
    cdef double[::1] compv = np.zeros(W + 1, dtype=np.float64)
    cdef Py_ssize_t c, h, w
    cdef double s, comp, y, snew, prev

    # W pass: running sum along the contiguous axis.
    for c in range(1, C + 1):
        for h in range(1, H + 1):
            s = 0.0
            comp = 0.0
            for w in range(1, W + 1):
                y = src[c - 1, h - 1, w - 1] - comp
                snew = s + y
                comp = (snew - s) - y
                s = snew
                t[c, h, w] = s

    # H pass: per-column compensation, reset per channel.
    for c in range(1, C + 1):
        for w in range(1, W + 1):
            compv[w] = 0.0
        for h in range(2, H + 1):
            for w in range(1, W + 1):
                y = t[c, h, w] - compv[w]
                prev = t[c, h - 1, w]
                snew = prev + y
                compv[w] = (snew - prev) - y
                t[c, h, w] = snew

    # C pass: per-cell compensation plane.
    for h in range(1, H + 1):
        for w in range(1, W + 1):
            compp[h, w] = 0.0
    for c in range(2, C + 1):
        for h in range(1, H + 1):
            for w in range(1, W + 1):
                y = t[c, h, w] - compp[h, w]
                prev = t[c - 1, h, w]
                snew = prev + y
                compp[h, w] = (snew - prev) - y
                t[c, h, w] = snew

    return out_arr


def grouped_box_sums(double[:, :, ::1] table,
                     idx_t[::1] c0, idx_t[::1] c1,
                     idx_t[::1] h0, idx_t[::1] h1,
                     idx_t[::1] w0, idx_t[::1] w1,
                     int threads=0):
    """8-corner inclusion-exclusion over per-axis half-open range vectors.

    Each output cell is eight table reads; deterministic for any thread
    count because cells are written independently.
    """
    cdef Py_ssize_t G = c0.shape[0], H = h0.shape[0], W = w0.shape[0]
    out_arr = np.empty((G, H, W), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t g, h, w, row
    cdef Py_ssize_t a0, a1, b0, b1, d0, d1
    cdef int nt = threads if threads > 0 else omp_get_max_threads()

    for row in prange(G * H, nogil=True, num_threads=nt, schedule='static'):
        g = row // H
        h = row % H
        a0 = c0[g]
        a1 = c1[g]
        b0 = h0[h]
        b1 = h1[h]
        for w in range(W):
            d0 = w0[w]
            d1 = w1[w]
            out[g, h, w] = (table[a1, b1, d1] - table[a0, b1, d1]
                            - table[a1, b0, d1] - table[a1, b1, d0]
                            + table[a0, b0, d1] + table[a0, b1, d0]
                            + table[a1, b0, d0] - table[a0, b0, d0])
    return out_arr


def adjoint_box_scatter(double[:, :, ::1] fields,
                        idx_t[::1] starts_h, idx_t[::1] starts_w,
                        idx_t[::1] lo_h, idx_t[::1] hi_h,
                        idx_t[::1] lo_w, idx_t[::1] hi_w,
                        int threads=0):
    """Transpose of the clamped sliding window-sum operator, per plane.

    Collapses anchor fields onto the valid top-left grid (segment starts map
    the clamp's preimage), builds a 2-D prefix table, and gathers one
    4-corner box per output cell.  O(H*W) per plane for any window.
    """
    cdef Py_ssize_t P = fields.shape[0], H = fields.shape[1], W = fields.shape[2]
    cdef Py_ssize_t nvh = starts_h.shape[0], nvw = starts_w.shape[0]
    out_arr = np.empty((P, H, W), dtype=np.float64)
    rows_arr = np.empty((P, nvh, W), dtype=np.float64)
    table_arr = np.zeros((P, nvh + 1, nvw + 1), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, :, ::1] rows = rows_arr
    cdef double[:, :, ::1] table = table_arr
    cdef Py_ssize_t pl, a, b, h, w, u, v, stop
    cdef double acc
    cdef int nt = threads if threads > 0 else omp_get_max_threads()

    for pl in prange(P, nogil=True, num_threads=nt, schedule='static'):
        # collapse anchor rows onto the valid grid
        for a in range(nvh):
            stop = starts_h[a + 1] if a + 1 < nvh else H
            for w in range(W):
                rows[pl, a, w] = 0.0
            for h in range(starts_h[a], stop):
                for w in range(W):
                    rows[pl, a, w] = rows[pl, a, w] + fields[pl, h, w]
        # collapse anchor columns, writing into the (padded) prefix table
        for a in range(nvh):
            for b in range(nvw):
                stop = starts_w[b + 1] if b + 1 < nvw else W
                acc = 0.0
                for w in range(starts_w[b], stop):
                    acc = acc + rows[pl, a, w]
                table[pl, a + 1, b + 1] = acc
        # 2-D prefix sums in place
        for a in range(1, nvh + 1):
            for b in range(1, nvw + 1):
                table[pl, a, b] = (table[pl, a, b] + table[pl, a - 1, b]
                                   + table[pl, a, b - 1] - table[pl, a - 1, b - 1])
        # 4-corner gather per output cell
        for u in range(H):
            for v in range(W):
                out[pl, u, v] = (table[pl, hi_h[u], hi_w[v]]
                                 - table[pl, lo_h[u], hi_w[v]]
                                 - table[pl, hi_h[u], lo_w[v]]
                                 + table[pl, lo_h[u], lo_w[v]])
    return out_arr


def fused_normalize(double[:, :, ::1] x, double[:, :, ::1] mean_g,
                    double[:, :, ::1] inv_g, double[::1] gamma, double[::1] beta,
                    Py_ssize_t c_group, double[:, :, ::1] out, int threads=0):
    """out = (x - mean) * inv * gamma + beta with per-group stats maps."""
    cdef Py_ssize_t C = x.shape[0], H = x.shape[1], W = x.shape[2]
    cdef Py_ssize_t c, h, w, g
    cdef double gc, bc
    cdef int nt = threads if threads > 0 else omp_get_max_threads()
    for c in prange(C, nogil=True, num_threads=nt, schedule='static'):
        g = c // c_group
        gc = gamma[c]
        bc = beta[c]
        for h in range(H):
            for w in range(W):
                out[c, h, w] = (x[c, h, w] - mean_g[g, h, w]) * inv_g[g, h, w] * gc + bc


def naive_forward(floating[:, :, ::1] x,
                  idx_t[::1] c0, idx_t[::1] c1,
                  idx_t[::1] h0, idx_t[::1] h1,
                  idx_t[::1] w0, idx_t[::1] w1,
                  double[::1] gamma, double[::1] beta, double eps,
                  floating[:, :, ::1] out, int threads=0):
    """Single-pass direct-summation forward: window stats then normalize.

    Accepts float32 or float64 buffers; accumulation is double either way.
    """
    cdef Py_ssize_t G = c0.shape[0], H = h0.shape[0], W = w0.shape[0]
    cdef Py_ssize_t g, h, w, c, u, v, row
    cdef double s1, s2, val, m, vv, n, inv
    cdef int nt = threads if threads > 0 else omp_get_max_threads()

    for row in prange(G * H, nogil=True, num_threads=nt, schedule='static'):
        g = row // H
        h = row % H
        for w in range(W):
            s1 = 0.0
            s2 = 0.0
            for c in range(c0[g], c1[g]):
                for u in range(h0[h], h1[h]):
                    for v in range(w0[w], w1[w]):
                        val = <double>x[c, u, v]
                        s1 = s1 + val
                        s2 = s2 + val * val
            n = <double>((c1[g] - c0[g]) * (h1[h] - h0[h]) * (w1[w] - w0[w]))
            m = s1 / n
            vv = s2 / n - m * m
            if vv < 0.0:
                vv = 0.0
            inv = 1.0 / sqrt(vv + eps)
            for c in range(c0[g], c1[g]):
                out[c, h, w] = <floating>((<double>x[c, h, w] - m) * inv * gamma[c]
                                          + beta[c])


def naive_group_stats(double[:, :, ::1] x,
                      idx_t[::1] c0, idx_t[::1] c1,
                      idx_t[::1] h0, idx_t[::1] h1,
                      idx_t[::1] w0, idx_t[::1] w1,
                      int threads=0):
    """Direct-summation window statistics: (mean, var) maps of shape (G, H, W).

    Every position pays for its full window extent; this is the comparison
    path for the constant-time claim, not the production path.
    """
    cdef Py_ssize_t G = c0.shape[0], H = h0.shape[0], W = w0.shape[0]
    mean_arr = np.empty((G, H, W), dtype=np.float64)
    var_arr = np.empty((G, H, W), dtype=np.float64)
    cdef double[:, :, ::1] mean = mean_arr
    cdef double[:, :, ::1] var = var_arr
    cdef Py_ssize_t g, h, w, c, u, v, row
    cdef double s1, s2, val, m, vv, n
    cdef int nt = threads if threads > 0 else omp_get_max_threads()

    for row in prange(G * H, nogil=True, num_threads=nt, schedule='static'):
        g = row // H
        h = row % H
        for w in range(W):
            s1 = 0.0
            s2 = 0.0
            for c in range(c0[g], c1[g]):
                for u in range(h0[h], h1[h]):
                    for v in range(w0[w], w1[w]):
                        val = x[c, u, v]
                        s1 = s1 + val
                        s2 = s2 + val * val
            n = <double>((c1[g] - c0[g]) * (h1[h] - h0[h]) * (w1[w] - w0[w]))
            m = s1 / n
            vv = s2 / n - m * m
            mean[g, h, w] = m
            var[g, h, w] = vv if vv > 0.0 else 0.0
    return mean_arr, var_arr
