"""Deliberately slow, transparently correct reference implementations.

Ground truth for every equivalence test: per-position loops, two-pass
mean/variance, float64 throughout, single-threaded.  Window and group
ranges come from the same helpers as the fast path (`windows`), so boundary
semantics match by construction; the summation logic is independent.
"""

from __future__ import annotations

import numpy as np

from . import windows
from .errors import GroupError, StateError
from .norms import AffineParams, LcnConfig, LrnConfig, NormStats, gaussian_window
from .tensor import validate_tensor

__all__ = ["lcn_naive", "family_naive"]


def lcn_naive(x: np.ndarray, cfg: LcnConfig, params: AffineParams):
    """Per-position windowed normalization by explicit window evaluation."""
    x = validate_tensor(x)
    B, C, H, W = x.shape
    cfg.check(C)
    params.check(C)
    x64 = x.astype(np.float64, copy=False)
    gamma, beta = np.asarray(params.gamma, np.float64), np.asarray(params.beta, np.float64)

    spatial_range = windows.sliding_range if cfg.mode == "sliding" else windows.tiled_range
    y = np.empty_like(x64)
    mean = np.empty_like(x64)
    var = np.empty_like(x64)
    n_map = np.empty((B, C, H, W), dtype=np.int64)
    for b in range(B):
        for c in range(C):
            c0, c1 = windows.group_range(c, cfg.c_group)
            for h in range(H):
                h0, h1 = spatial_range(H, cfg.p, h)
                for w in range(W):
                    w0, w1 = spatial_range(W, cfg.q, w)
                    win = x64[b, c0:c1, h0:h1, w0:w1]
                    mu = win.mean()
                    sig2 = ((win - mu) ** 2).mean()
                    mean[b, c, h, w] = mu
                    var[b, c, h, w] = sig2
                    n_map[b, c, h, w] = win.size
                    xhat = (x64[b, c, h, w] - mu) / np.sqrt(sig2 + cfg.eps)
                    y[b, c, h, w] = gamma[c] * xhat + beta[c]
    stats = NormStats(mean=mean, var=var, n_map=n_map)
    return y.astype(x.dtype, copy=False), stats


def _set_normalize(x64, mean, var, eps, gamma, beta):
    return gamma * ((x64 - mean) / np.sqrt(var + eps)) + beta


def family_naive(op: str, x: np.ndarray, config, params: AffineParams) -> np.ndarray:
    """Direct index-set evaluation of one reference normalization.

    op is one of gn/in/ln/bn/lrn; ``config`` is a dict carrying eps (and
    groups for gn, training/running for bn) or an LrnConfig for lrn.
    """
    x = validate_tensor(x)
    B, C, H, W = x.shape
    x64 = x.astype(np.float64, copy=False)

    if op == "lrn":
        cfg = config if isinstance(config, LrnConfig) else LrnConfig(**(config or {}))
        return _lrn_naive(x, x64, cfg)

    params.check(C)
    gamma = np.asarray(params.gamma, np.float64)
    beta = np.asarray(params.beta, np.float64)
    eps = config["eps"]
    y = np.empty_like(x64)

    if op in ("gn", "in", "ln"):
        groups = {"gn": config.get("groups"), "in": C, "ln": 1}[op]
        if groups is None or groups < 1 or C % groups != 0:
            raise GroupError(f"{groups} groups do not partition {C} channels")
        size = C // groups
        for b in range(B):
            for g in range(groups):
                sl = x64[b, g * size : (g + 1) * size]
                mu = sl.mean()
                sig2 = ((sl - mu) ** 2).mean()
                for c in range(g * size, (g + 1) * size):
                    y[b, c] = _set_normalize(x64[b, c], mu, sig2, eps, gamma[c], beta[c])
    elif op == "bn":
        training = config.get("training", True)
        if training:
            for c in range(C):
                sl = x64[:, c]
                mu = sl.mean()
                sig2 = ((sl - mu) ** 2).mean()
                y[:, c] = _set_normalize(sl, mu, sig2, eps, gamma[c], beta[c])
        else:
            running = config.get("running")
            if running is None:
                raise StateError("eval-mode bn requires running stats")
            for c in range(C):
                y[:, c] = _set_normalize(
                    x64[:, c], running.mean[c], running.var[c], eps, gamma[c], beta[c]
                )
    else:
        raise ValueError(f"unknown op {op!r}")
    return y.astype(x.dtype, copy=False)


def _lrn_naive(x, x64, cfg: LrnConfig) -> np.ndarray:
    cfg.check()
    B, C, H, W = x64.shape
    wg = gaussian_window(cfg.window, cfg.sigma)
    r = cfg.window // 2
    offsets = np.arange(-r, r + 1)
    out = np.empty_like(x64)
    for b in range(B):
        centered = np.empty((C, H, W))
        for h in range(H):
            hs = np.clip(h + offsets, 0, H - 1)
            for w in range(W):
                ws = np.clip(w + offsets, 0, W - 1)
                win = x64[b][:, hs[:, None], ws[None, :]]
                centered[:, h, w] = x64[b, :, h, w] - (win * wg).sum(axis=(1, 2))
        sigma_hw = np.empty((H, W))
        for h in range(H):
            hs = np.clip(h + offsets, 0, H - 1)
            for w in range(W):
                ws = np.clip(w + offsets, 0, W - 1)
                win = centered[:, hs[:, None], ws[None, :]]
                sigma_hw[h, w] = np.sqrt((win * win * wg).sum() / C)
        floor = sigma_hw.mean()
        denom = np.maximum(sigma_hw, floor)[None]
        tiny = 1e-12 * max(1.0, float(np.abs(x64[b]).max()))
        out[b] = np.divide(centered, denom, out=np.zeros_like(centered),
                           where=denom > tiny)
    return out.astype(x.dtype, copy=False)
