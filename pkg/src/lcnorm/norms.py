"""Forward passes: windowed local normalization plus the reference family.

The windowed op normalizes every position by the mean and variance of a
p x q spatial window and a fixed-size channel group around it; group,
instance, layer, and batch normalization are the global index-set variants,
and the small-window Gaussian contrast normalization is kept as a baseline.
All statistics are computed and saved in float64; outputs match the input
dtype.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, integral, windows
from .errors import GroupError, RangeError, ShapeError, StateError
from .tensor import validate_tensor

__all__ = [
    "LcnConfig",
    "LrnConfig",
    "AffineParams",
    "NormStats",
    "RunningStats",
    "lcn_forward",
    "gn_forward",
    "in_forward",
    "ln_forward",
    "bn_forward",
    "lrn_forward",
    "affine",
]


@dataclass(frozen=True)
class LcnConfig:
    """Window/group configuration for the local normalization.

    c_group: channels per statistics group (must divide C).
    p, q:    spatial window height and width.
    mode:    'sliding' = centered clamped windows, 'tiled' = floor partition.
    boundary: only 'replicate' (clamp windows fully inside the image).
    eps:     variance floor added under the square root.
    """

    c_group: int
    p: int
    q: int
    mode: str = "sliding"
    boundary: str = "replicate"
    eps: float = 1e-5

    def check(self, channels: int) -> None:
        if self.c_group < 1 or channels % self.c_group != 0:
            raise GroupError(
                f"c_group {self.c_group} does not partition {channels} channels"
            )
        if self.p < 1 or self.q < 1:
            raise RangeError(f"window sides must be >= 1, got {self.p}x{self.q}")
        if self.mode not in windows.MODES:
            raise ValueError(f"mode must be one of {windows.MODES}, got {self.mode!r}")
        if self.boundary not in windows.BOUNDARIES:
            raise ValueError(f"unsupported boundary {self.boundary!r}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


@dataclass(frozen=True)
class LrnConfig:
    """Gaussian-window contrast normalization settings.

    window is the (odd, >= 3) side of the weighting window; sigma_g its
    standard deviation (defaults to window / 4).  The divisor floor is the
    image-wide mean of the local deviation map ('mean_sigma').
    """

    window: int = 9
    sigma_g: float | None = None
    c_mode: str = "mean_sigma"

    def check(self) -> None:
        if self.window < 3 or self.window % 2 == 0:
            raise RangeError(f"window must be odd and >= 3, got {self.window}")
        if self.c_mode != "mean_sigma":
            raise ValueError(f"unsupported c_mode {self.c_mode!r}")

    @property
    def sigma(self) -> float:
        return self.window / 4.0 if self.sigma_g is None else float(self.sigma_g)


@dataclass(frozen=True)
class AffineParams:
    """Per-channel scale and shift applied after normalization."""

    gamma: np.ndarray
    beta: np.ndarray

    @classmethod
    def identity(cls, channels: int) -> "AffineParams":
        return cls(np.ones(channels), np.zeros(channels))

    def check(self, channels: int) -> None:
        g = np.asarray(self.gamma, dtype=np.float64)
        b = np.asarray(self.beta, dtype=np.float64)
        if g.shape != (channels,) or b.shape != (channels,):
            raise ShapeError(
                f"affine params must have shape ({channels},), got {g.shape}/{b.shape}"
            )
        if not (np.isfinite(g).all() and np.isfinite(b).all()):
            raise ShapeError("affine params contain NaN or Inf")


@dataclass(frozen=True)
class NormStats:
    """Per-position statistics saved by a forward pass.

    mean/var are full (B, C, H, W) float64 maps (var is pre-eps, clamped at
    zero); n_map counts the elements pooled at each position.
    """

    mean: np.ndarray
    var: np.ndarray
    n_map: np.ndarray


@dataclass
class RunningStats:
    """Mutable exponential-average state for batch normalization."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def initial(cls, channels: int, momentum: float = 0.1) -> "RunningStats":
        return cls(np.zeros(channels), np.ones(channels), momentum)


def _as_f64(params: AffineParams) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.asarray(params.gamma, dtype=np.float64),
        np.asarray(params.beta, dtype=np.float64),
    )


def _finish(x, x64, mean, var, n_map, eps, params):
    """Normalize against full-size stats maps and apply the affine transform."""
    C = x.shape[1]
    gamma, beta = _as_f64(params)
    xhat = (x64 - mean) / np.sqrt(var + eps)
    y = xhat * gamma.reshape(1, C, 1, 1) + beta.reshape(1, C, 1, 1)
    return y.astype(x.dtype, copy=False), NormStats(mean=mean, var=var, n_map=n_map)


def grouped_normalize(x, x64, mean_g, var_g, cfg, params, threads: int = 0):
    """Normalize from per-group stats maps without expanding them to full size."""
    B = x.shape[0]
    gamma, beta = _as_f64(params)
    inv_g = 1.0 / np.sqrt(var_g + cfg.eps)
    y64 = np.empty(x64.shape)
    for b in range(B):
        _kernels.fused_normalize(
            x64[b], mean_g[b], inv_g[b], gamma, beta, cfg.c_group, y64[b], threads
        )
    return y64.astype(x.dtype, copy=False)


def lcn_forward(x: np.ndarray, cfg: LcnConfig, params: AffineParams, threads: int = 0):
    """Windowed normalization via summed-area tables.

    Per position: mean and variance over the clamped (or tiled) p x q window
    and the position's channel group, then (x - mean) / sqrt(var + eps) and
    the per-channel affine map.  Runtime is independent of p and q.
    """
    x = validate_tensor(x)
    B, C, H, W = x.shape
    cfg.check(C)
    params.check(C)
    x64 = x.astype(np.float64, copy=False)
    G = C // cfg.c_group

    n_sp = integral.window_counts((C, H, W), cfg.c_group, cfg.p, cfg.q, cfg.mode)
    nf = n_sp.astype(np.float64)
    mean_g = np.empty((B, G, H, W))
    var_g = np.empty((B, G, H, W))
    for b in range(B):
        t1 = integral.build_integral(x64, b, squared=False)
        t2 = integral.build_integral(x64, b, squared=True)
        s1 = integral.grouped_sums(t1, cfg.c_group, cfg.p, cfg.q, cfg.mode, threads)
        s2 = integral.grouped_sums(t2, cfg.c_group, cfg.p, cfg.q, cfg.mode, threads)
        m = s1 / nf
        v = s2 / nf - m * m
        np.maximum(v, 0.0, out=v)
        mean_g[b] = m
        var_g[b] = v

    y = grouped_normalize(x, x64, mean_g, var_g, cfg, params, threads)
    stats = NormStats(
        mean=np.repeat(mean_g, cfg.c_group, axis=1),
        var=np.repeat(var_g, cfg.c_group, axis=1),
        n_map=np.broadcast_to(n_sp, (B, C, H, W)),
    )
    return y, stats


def gn_forward(x: np.ndarray, groups: int, eps: float, params: AffineParams):
    """Per-sample statistics over each channel group's full spatial extent."""
    x = validate_tensor(x)
    B, C, H, W = x.shape
    if groups < 1 or C % groups != 0:
        raise GroupError(f"{groups} groups do not partition {C} channels")
    params.check(C)
    x64 = x.astype(np.float64, copy=False)

    xg = x64.reshape(B, groups, -1)
    mu = xg.mean(axis=2)
    var = xg.var(axis=2)
    shape5 = (B, groups, C // groups, H, W)
    mean_full = np.broadcast_to(mu[:, :, None, None, None], shape5).reshape(B, C, H, W)
    var_full = np.broadcast_to(var[:, :, None, None, None], shape5).reshape(B, C, H, W)
    n_map = np.broadcast_to(np.int64((C // groups) * H * W), (B, C, H, W))
    return _finish(x, x64, mean_full, var_full, n_map, eps, params)


def in_forward(x: np.ndarray, eps: float, params: AffineParams):
    """Per-sample, per-channel statistics (one group per channel)."""
    return gn_forward(x, x.shape[1], eps, params)


def ln_forward(x: np.ndarray, eps: float, params: AffineParams):
    """Per-sample statistics over all channels and positions (one group)."""
    return gn_forward(x, 1, eps, params)


def bn_forward(x: np.ndarray, eps: float, params: AffineParams,
               running: RunningStats | None = None, training: bool = True):
    """Per-channel statistics over (B, H, W) in training; stored averages in eval.

    In training mode the optional running state is updated in place as
    r <- (1 - momentum) * r + momentum * batch_stat (biased batch variance).
    """
    x = validate_tensor(x)
    B, C, H, W = x.shape
    params.check(C)
    x64 = x.astype(np.float64, copy=False)

    if training:
        mu = x64.mean(axis=(0, 2, 3))
        var = x64.var(axis=(0, 2, 3))
        if running is not None:
            m = running.momentum
            running.mean[:] = (1.0 - m) * running.mean + m * mu
            running.var[:] = (1.0 - m) * running.var + m * var
    else:
        if running is None:
            raise StateError("eval-mode batch normalization requires running stats")
        mu = np.asarray(running.mean, dtype=np.float64)
        var = np.asarray(running.var, dtype=np.float64)
        if mu.shape != (C,) or var.shape != (C,):
            raise StateError(f"running stats shaped {mu.shape}/{var.shape}, need ({C},)")

    mean_full = np.broadcast_to(mu[None, :, None, None], (B, C, H, W))
    var_full = np.broadcast_to(var[None, :, None, None], (B, C, H, W))
    n_map = np.broadcast_to(np.int64(B * H * W), (B, C, H, W))
    return _finish(x, x64, mean_full, var_full, n_map, eps, params)


def gaussian_window(side: int, sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian weights of odd side length (sum exactly 1)."""
    r = side // 2
    ii, jj = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    w = np.exp(-(ii * ii + jj * jj) / (2.0 * sigma * sigma))
    return w / w.sum()


def lrn_forward(x: np.ndarray, cfg: LrnConfig) -> np.ndarray:
    """Gaussian-window contrast normalization (small-window baseline).

    Subtracts the per-channel Gaussian-weighted local mean, then divides by
    max(c, sigma_hw) where sigma_hw is the weighted deviation pooled over
    the window and all channels, and c is its image-wide mean.  A divisor
    of zero maps to zero output; "zero" is judged against a relative floor
    (1e-12 of the input magnitude) because the weighted mean of a constant
    patch leaves rounding residue of that order in the deviations.
    """
    from scipy import ndimage  # deferred: keeps CLI start-up light

    x = validate_tensor(x)
    cfg.check()
    B = x.shape[0]
    C = x.shape[1]
    weights = gaussian_window(cfg.window, cfg.sigma)[None, :, :]
    x64 = x.astype(np.float64, copy=False)
    out = np.empty_like(x64)
    for b in range(B):
        local_mean = ndimage.correlate(x64[b], weights, mode="nearest")
        v = x64[b] - local_mean
        pooled = ndimage.correlate(v * v, weights, mode="nearest").sum(axis=0) / C
        sigma_hw = np.sqrt(pooled)
        floor = sigma_hw.mean()
        denom = np.maximum(sigma_hw, floor)[None, :, :]
        tiny = 1e-12 * max(1.0, float(np.abs(x64[b]).max()))
        out[b] = np.divide(v, denom, out=np.zeros_like(v), where=denom > tiny)
    return out.astype(x.dtype, copy=False)


def affine(xhat: np.ndarray, params: AffineParams) -> np.ndarray:
    """Per-channel y = gamma * xhat + beta."""
    xhat = np.asarray(xhat)
    if xhat.ndim != 4:
        raise ShapeError(f"expected a 4-D tensor, got ndim={xhat.ndim}")
    C = xhat.shape[1]
    params.check(C)
    gamma, beta = _as_f64(params)
    y = xhat.astype(np.float64, copy=False) * gamma.reshape(1, C, 1, 1)
    y += beta.reshape(1, C, 1, 1)
    return y.astype(xhat.dtype, copy=False)
