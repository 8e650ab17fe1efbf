"""Backward passes and their finite-difference verification harness.

The windowed backward is the exact adjoint of the forward map with the
statistics differentiated through (no stop-gradient).  Its core is the
transpose of the clamped window-sum operator: per-anchor fields are
collapsed over the clamp's preimage, prefix-summed, and gathered back, so
cost stays O(B*C*H*W) independent of the window.  Gradient checks compare
against central differences of a fixed random linear functional of the
output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, windows
from .errors import DegenerateInputError, ShapeError, StateError
from .norms import (
    AffineParams,
    LcnConfig,
    NormStats,
    bn_forward,
    gn_forward,
    in_forward,
    lcn_forward,
    ln_forward,
)
from .tensor import fill_random, validate_tensor
from . import integral

__all__ = [
    "GradBundle",
    "FdReport",
    "lcn_backward",
    "reference_backward",
    "finite_diff_check",
    "adjoint_gap",
]

_VAR_DEGENERACY_FLOOR = 1e-3


@dataclass(frozen=True)
class GradBundle:
    """Gradients with respect to the input and the affine parameters (float64)."""

    grad_x: np.ndarray
    grad_gamma: np.ndarray
    grad_beta: np.ndarray


def _adjoint_window_sum(fields: np.ndarray, p: int, q: int, mode: str) -> np.ndarray:
    """Transpose of the per-position window-sum operator.

    fields has shape (B, G, H, W), one value per window anchor; the result
    at (u, v) sums the fields of every anchor whose window contains (u, v).
    Sliding mode honors the clamp: border anchors were shifted inside, so
    their fields land on interior elements via the clamp's preimage.
    """
    B, G, H, W = fields.shape
    if mode == "tiled":
        starts_h = np.unique(np.arange(0, H, p) if p < H else np.zeros(1, np.int64))
        starts_w = np.unique(np.arange(0, W, q) if q < W else np.zeros(1, np.int64))
        tiles = np.add.reduceat(fields, starts_h, axis=2)
        tiles = np.add.reduceat(tiles, starts_w, axis=3)
        counts_h = np.diff(np.append(starts_h, H))
        counts_w = np.diff(np.append(starts_w, W))
        return np.repeat(np.repeat(tiles, counts_h, axis=2), counts_w, axis=3)

    span_h = min(p, H)
    span_w = min(q, W)
    h0v, _ = windows.axis_ranges(H, p, "sliding")
    w0v, _ = windows.axis_ranges(W, q, "sliding")
    n_valid_h = H - span_h + 1
    n_valid_w = W - span_w + 1

    # Segment starts map each valid top-left to the anchors clamped onto it.
    starts_h = np.searchsorted(h0v, np.arange(n_valid_h))
    starts_w = np.searchsorted(w0v, np.arange(n_valid_w))
    u = np.arange(H)
    v = np.arange(W)
    lo_h = np.maximum(0, u - span_h + 1)
    hi_h = np.minimum(u, H - span_h) + 1
    lo_w = np.maximum(0, v - span_w + 1)
    hi_w = np.minimum(v, W - span_w) + 1

    planes = np.ascontiguousarray(fields.reshape(B * G, H, W))
    out = _kernels.adjoint_box_scatter(planes, starts_h, starts_w,
                                       lo_h, hi_h, lo_w, hi_w)
    return out.reshape(B, G, H, W)


def _check_stats(stats: NormStats, shape, expected_n) -> None:
    if stats.mean.shape != shape or stats.var.shape != shape or stats.n_map.shape != shape:
        raise StateError(f"saved stats shaped for {stats.mean.shape}, forward was {shape}")
    if not np.array_equal(stats.n_map[0, 0], expected_n):
        raise StateError("saved n_map inconsistent with the given configuration")


def lcn_backward(grad_y: np.ndarray, x: np.ndarray, cfg: LcnConfig,
                 params: AffineParams, stats: NormStats) -> GradBundle:
    """Exact adjoint of the windowed forward pass.

    grad_beta and grad_gamma are per-channel sums of grad_y and grad_y*xhat;
    grad_x routes each position's contribution back through every window
    whose statistics it entered, including windows clamped onto it from the
    border.
    """
    x = validate_tensor(x)
    grad_y = np.asarray(grad_y)
    if grad_y.shape != x.shape:
        raise ShapeError(f"grad_y shape {grad_y.shape} != input shape {x.shape}")
    B, C, H, W = x.shape
    cfg.check(C)
    params.check(C)
    expected_n = integral.window_counts((C, H, W), cfg.c_group, cfg.p, cfg.q, cfg.mode)
    _check_stats(stats, x.shape, expected_n)

    x64 = x.astype(np.float64, copy=False)
    g64 = grad_y.astype(np.float64, copy=False)
    gamma = np.asarray(params.gamma, np.float64)
    cg = cfg.c_group
    G = C // cg

    inv_full = 1.0 / np.sqrt(stats.var + cfg.eps)
    xhat = (x64 - stats.mean) * inv_full
    grad_beta = g64.sum(axis=(0, 2, 3))
    grad_gamma = (g64 * xhat).sum(axis=(0, 2, 3))

    g_xhat = g64 * gamma.reshape(1, C, 1, 1)
    gx5 = g_xhat.reshape(B, G, cg, H, W)
    agg_g = gx5.sum(axis=2)
    agg_gx = (gx5 * xhat.reshape(B, G, cg, H, W)).sum(axis=2)

    mu_g = stats.mean[:, ::cg]
    inv_g = inv_full[:, ::cg]
    n = expected_n.astype(np.float64)  # (H, W), already includes c_group

    f_mean = agg_g * inv_g / n
    f_scale = agg_gx * inv_g * inv_g / n
    f_shift = f_scale * mu_g

    fields = np.concatenate([f_mean, f_scale, f_shift], axis=1)  # (B, 3G, H, W)
    t_all = _adjoint_window_sum(fields, cfg.p, cfg.q, cfg.mode)
    t_mean, t_scale, t_shift = np.split(t_all, 3, axis=1)

    direct = gx5 * inv_g[:, :, None]
    grad_x5 = direct - t_mean[:, :, None] - x64.reshape(B, G, cg, H, W) * t_scale[:, :, None]
    grad_x5 += t_shift[:, :, None]
    return GradBundle(grad_x5.reshape(B, C, H, W), grad_gamma, grad_beta)


def reference_backward(op: str, grad_y: np.ndarray, x: np.ndarray, config: dict,
                       params: AffineParams, stats: NormStats) -> GradBundle:
    """Backward for the global family; one shared-statistics set per position."""
    x = validate_tensor(x)
    grad_y = np.asarray(grad_y)
    if grad_y.shape != x.shape:
        raise ShapeError(f"grad_y shape {grad_y.shape} != input shape {x.shape}")
    B, C, H, W = x.shape
    params.check(C)
    eps = config["eps"]

    x64 = x.astype(np.float64, copy=False)
    g64 = grad_y.astype(np.float64, copy=False)
    gamma = np.asarray(params.gamma, np.float64)

    inv = 1.0 / np.sqrt(stats.var + eps)
    xhat = (x64 - stats.mean) * inv
    grad_beta = g64.sum(axis=(0, 2, 3))
    grad_gamma = (g64 * xhat).sum(axis=(0, 2, 3))
    g_xhat = g64 * gamma.reshape(1, C, 1, 1)

    if op == "bn" and not config.get("training", True):
        # Stored averages are constants; only the direct term survives.
        return GradBundle(g_xhat * inv, grad_gamma, grad_beta)

    if op in ("gn", "in", "ln"):
        groups = {"gn": config.get("groups"), "in": C, "ln": 1}[op]
        expected_n = np.full((H, W), (C // groups) * H * W, dtype=np.int64)
        _check_stats(stats, x.shape, expected_n)
        shaped = (B, groups, (C // groups) * H * W)
        axes = (2,)
    elif op == "bn":
        expected_n = np.full((H, W), B * H * W, dtype=np.int64)
        _check_stats(stats, x.shape, expected_n)
        shaped = None
        axes = (0, 2, 3)
    else:
        raise ValueError(f"unknown op {op!r}")

    if shaped is not None:
        gs = g_xhat.reshape(shaped)
        xs = xhat.reshape(shaped)
        mean_g = gs.mean(axis=2, keepdims=True)
        mean_gx = (gs * xs).mean(axis=2, keepdims=True)
        grad_x = (inv.reshape(shaped) * (gs - mean_g - xs * mean_gx)).reshape(x.shape)
    else:
        mean_g = g_xhat.mean(axis=axes, keepdims=True)
        mean_gx = (g_xhat * xhat).mean(axis=axes, keepdims=True)
        grad_x = inv * (g_xhat - mean_g - xhat * mean_gx)
    return GradBundle(grad_x, grad_gamma, grad_beta)


# ---------------------------------------------------------------------------
# Numerical verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FdReport:
    max_abs_err: float
    max_rel_err: float
    worst_index: tuple
    component_rel: dict


def run_forward(op: str, x, config, params, training: bool = True):
    """Dispatch a named forward op; config is LcnConfig for lcn, dict otherwise."""
    if op == "lcn":
        return lcn_forward(x, config, params)
    if op == "gn":
        return gn_forward(x, config["groups"], config["eps"], params)
    if op == "in":
        return in_forward(x, config["eps"], params)
    if op == "ln":
        return ln_forward(x, config["eps"], params)
    if op == "bn":
        return bn_forward(x, config["eps"], params, training=training)
    raise ValueError(f"unknown op {op!r}")


def run_backward(op: str, grad_y, x, config, params, stats):
    if op == "lcn":
        return lcn_backward(grad_y, x, config, params, stats)
    return reference_backward(op, grad_y, x, config, params, stats)


def _rel_errors(analytic: np.ndarray, numeric: np.ndarray):
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-12)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6 * scale)
    return np.abs(analytic - numeric), np.abs(analytic - numeric) / denom


def finite_diff_check(op: str, x: np.ndarray, config, params: AffineParams,
                      step: float = 1e-4, seed: int = 0) -> FdReport:
    """Compare analytic gradients against central differences.

    The loss is a fixed random linear functional L = sum(w * y) so symmetric
    cancellations cannot hide sign errors.  Inputs whose window variance is
    not bounded away from zero are rejected with DegenerateInputError (the
    forward is ill-conditioned for differencing there).
    """
    x = validate_tensor(np.asarray(x, dtype=np.float64)).copy()
    _, stats = run_forward(op, x, config, params)
    if stats.var.min() < _VAR_DEGENERACY_FLOOR:
        raise DegenerateInputError(
            f"window variance {stats.var.min():.3e} below {_VAR_DEGENERACY_FLOOR:.0e}"
        )
    w = fill_random(x.shape, seed, "uniform01") - 0.5

    def loss(xv, pv):
        y, _ = run_forward(op, xv, config, pv)
        return float((w * y).sum())

    bundle = run_backward(op, w, x, config, params, stats)

    num_x = np.empty_like(x)
    flat = x.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + step
        up = loss(x, params)
        flat[j] = orig - step
        down = loss(x, params)
        flat[j] = orig
        num_x.reshape(-1)[j] = (up - down) / (2.0 * step)

    gamma = np.asarray(params.gamma, np.float64).copy()
    beta = np.asarray(params.beta, np.float64).copy()
    num_gamma = np.empty_like(gamma)
    num_beta = np.empty_like(beta)
    for c in range(gamma.size):
        for vec, out in ((gamma, num_gamma), (beta, num_beta)):
            orig = vec[c]
            vec[c] = orig + step
            up = loss(x, AffineParams(gamma, beta))
            vec[c] = orig - step
            down = loss(x, AffineParams(gamma, beta))
            vec[c] = orig
            out[c] = (up - down) / (2.0 * step)

    worst_abs = 0.0
    worst_rel = 0.0
    worst_index: tuple = ("", ())
    component_rel = {}
    for name, analytic, numeric in (
        ("grad_x", bundle.grad_x, num_x),
        ("grad_gamma", bundle.grad_gamma, num_gamma),
        ("grad_beta", bundle.grad_beta, num_beta),
    ):
        abs_err, rel_err = _rel_errors(analytic, numeric)
        component_rel[name] = float(rel_err.max())
        worst_abs = max(worst_abs, float(abs_err.max()))
        k = np.unravel_index(int(np.argmax(rel_err)), rel_err.shape)
        if float(rel_err[k]) > worst_rel:
            worst_rel = float(rel_err[k])
            worst_index = (name, k)
    return FdReport(max_abs_err=worst_abs, max_rel_err=worst_rel,
                    worst_index=worst_index, component_rel=component_rel)


def adjoint_gap(op: str, x: np.ndarray, config, params: AffineParams,
                seed: int = 0, step: float = 3e-4) -> float:
    """Gap of <J u, v> vs <u, J^T v> for random directions u, v.

    The left side uses a fourth-order central stencil on t -> <f(x + t u), v>
    with exactly-rounded dot products; the right side is the backward op.
    The gap is reported relative to the Cauchy-Schwarz scale ||u||*||J^T v||
    of the pairing (the raw inner products can be accidentally near zero for
    random directions, which would make any difference look huge).  Catches
    adjoint-of-clamp bugs that pointwise checks miss.
    """
    x = validate_tensor(np.asarray(x, dtype=np.float64))
    u = fill_random(x.shape, seed * 2 + 1, "normal01")
    v = fill_random(x.shape, seed * 2 + 2, "normal01")

    def phi(t: float) -> float:
        y, _ = run_forward(op, x + t * u, config, params)
        return math.fsum((y * v).ravel())

    lhs = (-phi(2 * step) + 8 * phi(step) - 8 * phi(-step) + phi(-2 * step)) / (12 * step)
    _, stats = run_forward(op, x, config, params)
    jtv = run_backward(op, v, x, config, params, stats).grad_x
    rhs = math.fsum((u * jtv).ravel())
    scale = max(float(np.linalg.norm(u.ravel()) * np.linalg.norm(jtv.ravel())), 1e-12)
    return abs(lhs - rhs) / scale
