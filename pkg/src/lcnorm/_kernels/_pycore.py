"""Pure-numpy kernel implementations, used when the compiled core is absent.

Same contracts as ``_fastcore``: integral tables are built with compensated
(Kahan) cumulative sums so box-sum cancellation stays at a few ulp of the
true value even for long prefixes; window sums are 8-corner gathers on the
table; ``naive_group_stats`` is the direct O(window)-per-position summation
used as the benchmark comparison path.

The ``threads`` argument is accepted for interface parity and ignored here;
numpy's own internal threading applies.  Results do not depend on it.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _kahan_cumsum_inplace(t: np.ndarray, axis: int) -> None:
    tm = np.moveaxis(t, axis, 0)
    comp = np.zeros_like(tm[0])
    s = np.array(tm[0])
    for k in range(1, tm.shape[0]):
        y = tm[k] - comp
        snew = s + y
        comp = (snew - s) - y
        tm[k] = snew
        s = snew


def build_table(src: np.ndarray) -> np.ndarray:
    """(C, H, W) float64 source -> (C+1, H+1, W+1) inclusive prefix-sum table."""
    c, h, w = src.shape
    t = np.zeros((c + 1, h + 1, w + 1), dtype=np.float64)
    t[1:, 1:, 1:] = src
    for axis in (2, 1, 0):
        _kahan_cumsum_inplace(t, axis)
    return t


def grouped_box_sums(table, c0, c1, h0, h1, w0, w1, threads: int = 0) -> np.ndarray:
    """8-corner inclusion-exclusion over per-axis half-open range vectors.

    Returns the (G, H, W) map of box sums; each output cell costs eight
    table reads regardless of the range extents.
    """
    a0 = c0[:, None, None]
    a1 = c1[:, None, None]
    b0 = h0[None, :, None]
    b1 = h1[None, :, None]
    d0 = w0[None, None, :]
    d1 = w1[None, None, :]
    t = table
    return (
        t[a1, b1, d1] - t[a0, b1, d1] - t[a1, b0, d1] - t[a1, b1, d0]
        + t[a0, b0, d1] + t[a0, b1, d0] + t[a1, b0, d0] - t[a0, b0, d0]
    )


def adjoint_box_scatter(fields, starts_h, starts_w, lo_h, hi_h, lo_w, hi_w,
                        threads: int = 0):
    """Transpose of the clamped sliding window-sum operator, per plane.

    Collapses anchor fields onto the valid top-left grid, prefix-sums, and
    gathers one 4-corner box per output cell.  O(H*W) per plane.
    """
    P, H, W = fields.shape
    nvh = starts_h.shape[0]
    nvw = starts_w.shape[0]
    m = np.add.reduceat(fields, starts_h, axis=1)
    m = np.add.reduceat(m, starts_w, axis=2)
    table = np.zeros((P, nvh + 1, nvw + 1))
    table[:, 1:, 1:] = m
    np.cumsum(table, axis=1, out=table)
    np.cumsum(table, axis=2, out=table)
    a0 = lo_h[:, None]
    a1 = hi_h[:, None]
    b0 = lo_w[None, :]
    b1 = hi_w[None, :]
    return table[:, a1, b1] - table[:, a0, b1] - table[:, a1, b0] + table[:, a0, b0]


def fused_normalize(x, mean_g, inv_g, gamma, beta, c_group, out, threads: int = 0):
    """out = (x - mean) * inv * gamma + beta with per-group stats maps."""
    C, H, W = x.shape
    G = C // c_group
    x5 = x.reshape(G, c_group, H, W)
    o5 = out.reshape(G, c_group, H, W)
    np.subtract(x5, mean_g[:, None], out=o5)
    o5 *= inv_g[:, None]
    o5 *= gamma.reshape(G, c_group, 1, 1)
    o5 += beta.reshape(G, c_group, 1, 1)


def naive_forward(x, c0, c1, h0, h1, w0, w1, gamma, beta, eps, out, threads: int = 0):
    """Single-pass direct-summation forward: window stats then normalize."""
    mean_g, var_g = naive_group_stats(x, c0, c1, h0, h1, w0, w1, threads)
    inv_g = 1.0 / np.sqrt(var_g + eps)
    c_group = int(c1[0] - c0[0])
    fused_normalize(x, mean_g, inv_g, gamma, beta, c_group, out, threads)


def naive_group_stats(x, c0, c1, h0, h1, w0, w1, threads: int = 0):
    """Direct-summation window statistics: (mean, var) maps of shape (G, H, W).

    Every spatial position pays for its full window extent, so runtime grows
    with the window area; this is the comparison path for the constant-time
    claim, not the production path.
    """
    C, H, W = x.shape
    G = c0.shape[0]
    cg = int(c1[0] - c0[0])
    gsum = x.reshape(G, cg, H, W).sum(axis=1)
    gsq = (x * x).reshape(G, cg, H, W).sum(axis=1)

    span_h = h1 - h0
    span_w = w1 - w0
    if span_h.min() == span_h.max() and span_w.min() == span_w.max():
        ph, qw = int(span_h[0]), int(span_w[0])
        s1 = sliding_window_view(gsum, (ph, qw), axis=(1, 2)).sum(axis=(-2, -1))
        s2 = sliding_window_view(gsq, (ph, qw), axis=(1, 2)).sum(axis=(-2, -1))
        s1 = s1[:, h0, :][:, :, w0]
        s2 = s2[:, h0, :][:, :, w0]
        n = float(cg * ph * qw)
        mean = s1 / n
        var = np.maximum(s2 / n - mean * mean, 0.0)
        return mean, var

    starts_h = np.unique(h0)
    starts_w = np.unique(w0)
    t1 = np.add.reduceat(np.add.reduceat(gsum, starts_h, axis=1), starts_w, axis=2)
    t2 = np.add.reduceat(np.add.reduceat(gsq, starts_h, axis=1), starts_w, axis=2)
    counts_h = np.diff(np.append(starts_h, H))
    counts_w = np.diff(np.append(starts_w, W))
    s1 = np.repeat(np.repeat(t1, counts_h, axis=1), counts_w, axis=2)
    s2 = np.repeat(np.repeat(t2, counts_h, axis=1), counts_w, axis=2)
    n = cg * (span_h[None, :, None] * span_w[None, None, :]).astype(np.float64)
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    return mean, var
