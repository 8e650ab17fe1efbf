"""Per-sample 3-D summed-area tables and O(1) box-sum queries.

An :class:`Integral3` holds the inclusive prefix-sum table of one (C, H, W)
sample slice, padded with zero leading planes so every half-open box sum is
an 8-corner signed read.  Tables accumulate in float64 regardless of the
input dtype: the sum-of-squares table would lose the variance to cancellation
in float32 once windows get large.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, windows
from .errors import GroupError, RangeError

__all__ = ["Integral3", "build_integral", "box_sum", "box_sums_all"]


@dataclass(frozen=True)
class Integral3:
    """Prefix-sum table over one sample: table[c, h, w] = sum over [0,c)x[0,h)x[0,w)."""

    dims: tuple[int, int, int]
    table: np.ndarray  # (C+1, H+1, W+1) float64


def build_integral(x: np.ndarray, sample: int, squared: bool = False) -> Integral3:
    """Build the summed-area table of sample ``sample``, optionally of x**2."""
    if not 0 <= sample < x.shape[0]:
        raise IndexError(f"sample {sample} out of range for batch {x.shape[0]}")
    src = np.ascontiguousarray(x[sample], dtype=np.float64)
    if squared:
        src = src * src
    return Integral3(dims=src.shape, table=_kernels.build_table(src))


def _check_axis(lo: int, hi: int, extent: int, axis: str) -> None:
    if not 0 <= lo < hi <= extent:
        raise RangeError(f"bad {axis} range [{lo}, {hi}) for extent {extent}")


def box_sum(ii: Integral3, c0: int, c1: int, h0: int, h1: int, w0: int, w1: int) -> float:
    """Sum of the source over [c0,c1) x [h0,h1) x [w0,w1) in eight reads."""
    C, H, W = ii.dims
    _check_axis(c0, c1, C, "channel")
    _check_axis(h0, h1, H, "row")
    _check_axis(w0, w1, W, "column")
    t = ii.table
    return float(
        t[c1, h1, w1] - t[c0, h1, w1] - t[c1, h0, w1] - t[c1, h1, w0]
        + t[c0, h0, w1] + t[c0, h1, w0] + t[c1, h0, w0] - t[c0, h0, w0]
    )


def _range_vectors(dims, c_group: int, p: int, q: int, mode: str):
    """Per-axis half-open range vectors for every output position."""
    C, H, W = dims
    if c_group < 1 or C % c_group != 0:
        raise GroupError(f"c_group {c_group} does not partition {C} channels")
    if p < 1 or q < 1:
        raise RangeError(f"window sides must be >= 1, got {p}x{q}")
    c0, c1 = windows.group_bounds(C, c_group)
    h0, h1 = windows.axis_ranges(H, p, mode)
    w0, w1 = windows.axis_ranges(W, q, mode)
    return c0, c1, h0, h1, w0, w1


def grouped_sums(ii: Integral3, c_group: int, p: int, q: int, mode: str = "sliding",
                 threads: int = 0) -> np.ndarray:
    """Window sums deduplicated per channel group: shape (C/c_group, H, W)."""
    vecs = _range_vectors(ii.dims, c_group, p, q, mode)
    return _kernels.grouped_box_sums(ii.table, *vecs, threads)


def box_sums_all(ii: Integral3, c_group: int, p: int, q: int, mode: str = "sliding",
                 boundary: str = "replicate", threads: int = 0) -> np.ndarray:
    """Dense (C, H, W) float64 map of window sums for every position.

    Sliding mode clamps each centered p x q window fully inside the slice
    (replicate boundary); tiled mode uses the floor partition with short
    edge tiles.  Runtime is O(C*H*W) independent of p and q.
    """
    if mode not in windows.MODES:
        raise ValueError(f"mode must be one of {windows.MODES}, got {mode!r}")
    if boundary not in windows.BOUNDARIES:
        raise ValueError(f"boundary must be one of {windows.BOUNDARIES}, got {boundary!r}")
    grouped = grouped_sums(ii, c_group, p, q, mode, threads)
    return np.repeat(grouped, c_group, axis=0)


def window_counts(dims, c_group: int, p: int, q: int, mode: str) -> np.ndarray:
    """Per-position element count n as an (H, W) int64 map."""
    _, H, W = dims
    if mode == "sliding":
        span = min(p, H) * min(q, W)
        return np.full((H, W), c_group * span, dtype=np.int64)
    h0, h1 = windows.axis_ranges(H, p, mode)
    w0, w1 = windows.axis_ranges(W, q, mode)
    return c_group * (h1 - h0)[:, None] * (w1 - w0)[None, :]
