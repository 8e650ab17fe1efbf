"""Window-range arithmetic shared by the fast kernels and the slow oracles.

Both the summed-area-table path and the per-position reference loops derive
their half-open index ranges from these helpers, so the two paths agree on
boundary semantics by construction.

Sliding windows are centered boxes clamped to lie fully inside the axis
(border positions shift the window inward rather than shrinking it, which
makes them reuse the statistics of the nearest fully-interior anchor).  Tiled
windows are the non-overlapping floor partition; edge tiles may be short.
"""

from __future__ import annotations

import numpy as np

from .errors import RangeError

MODES = ("sliding", "tiled")
BOUNDARIES = ("replicate",)


def sliding_range(extent: int, size: int, pos: int) -> tuple[int, int]:
    """Half-open range of the size-long window centered at ``pos``, clamped."""
    span = size if size < extent else extent
    lo = pos - size // 2
    hi_max = extent - span
    if lo < 0:
        lo = 0
    elif lo > hi_max:
        lo = hi_max
    return lo, lo + span


def tiled_range(extent: int, size: int, pos: int) -> tuple[int, int]:
    """Half-open range of the tile containing ``pos``; edge tiles truncate."""
    lo = (pos // size) * size
    hi = lo + size
    return lo, hi if hi < extent else extent


def group_range(channel: int, c_group: int) -> tuple[int, int]:
    """Half-open channel range of the partitioned group containing ``channel``."""
    lo = (channel // c_group) * c_group
    return lo, lo + c_group


def axis_ranges(extent: int, size: int, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """(lo, hi) int64 vectors for every position along one spatial axis."""
    if size < 1:
        raise RangeError(f"window size must be >= 1, got {size}")
    if mode == "sliding":
        pairs = [sliding_range(extent, size, pos) for pos in range(extent)]
    elif mode == "tiled":
        pairs = [tiled_range(extent, size, pos) for pos in range(extent)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    lo, hi = zip(*pairs)
    return np.asarray(lo, dtype=np.int64), np.asarray(hi, dtype=np.int64)


def group_bounds(channels: int, c_group: int) -> tuple[np.ndarray, np.ndarray]:
    """(lo, hi) int64 vectors for every channel group."""
    lo = np.arange(0, channels, c_group, dtype=np.int64)
    return lo, lo + c_group
