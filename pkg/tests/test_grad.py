"""Backward-pass tests: trivial identities, finite differences, adjointness."""

import numpy as np
import pytest

from lcnorm import (
    AffineParams,
    DegenerateInputError,
    LcnConfig,
    ShapeError,
    StateError,
    adjoint_gap,
    fill_random,
    finite_diff_check,
    gn_forward,
    lcn_backward,
    lcn_forward,
    ln_forward,
    reference_backward,
)


def ramped(dims, seed, spread=2.0):
    x = fill_random(dims, seed, "uniform01")
    return x + np.linspace(0.0, spread, x.size).reshape(dims)


def test_constant_input_tiled_gradients():
    x = np.full((1, 2, 6, 6), 5.0)
    params = AffineParams.identity(2)
    cfg = LcnConfig(2, 3, 3, mode="tiled")
    _, stats = lcn_forward(x, cfg, params)
    b = lcn_backward(np.ones_like(x), x, cfg, params, stats)
    assert b.grad_beta.tolist() == [36.0, 36.0]  # B*H*W per channel
    assert not b.grad_gamma.any()               # xhat is zero
    assert not b.grad_x.any()                   # uniform tile coverage cancels


def test_constant_input_sliding_border_gradient_is_real():
    # With clamped sliding windows border positions are covered by extra
    # windows, so the zero-variance gradient only cancels in the uniform
    # coverage zone; the border value must match finite differences.
    x = np.full((1, 2, 8, 8), 5.0)
    params = AffineParams.identity(2)
    cfg = LcnConfig(2, 3, 3, mode="sliding", eps=1e-5)
    _, stats = lcn_forward(x, cfg, params)
    b = lcn_backward(np.ones_like(x), x, cfg, params, stats)
    assert np.abs(b.grad_x[:, :, 3:-4, 3:-4]).max() < 1e-9
    assert abs(b.grad_x[0, 0, 0, 0]) > 1.0

    def loss(xx):
        y, _ = lcn_forward(xx, cfg, params)
        return float(y.sum())

    e = np.zeros_like(x)
    e[0, 0, 0, 0] = 1.0
    h = 1e-6
    fd = (loss(x + h * e) - loss(x - h * e)) / (2 * h)
    assert b.grad_x[0, 0, 0, 0] == pytest.approx(fd, rel=1e-6)


def test_zero_gamma_kills_grad_x():
    x = ramped((1, 2, 5, 5), 3)
    params = AffineParams(np.zeros(2), np.zeros(2))
    cfg = LcnConfig(2, 3, 3)
    _, stats = lcn_forward(x, cfg, params)
    gy = fill_random(x.shape, 9, "normal01")
    b = lcn_backward(gy, x, cfg, params, stats)
    assert not b.grad_x.any()
    xhat = (x - stats.mean) / np.sqrt(stats.var + cfg.eps)
    assert np.allclose(b.grad_gamma, (gy * xhat).sum(axis=(0, 2, 3)), rtol=1e-12)
    assert np.allclose(b.grad_beta, gy.sum(axis=(0, 2, 3)), rtol=1e-12)


def test_grad_beta_is_channel_sum_for_every_op():
    x = ramped((2, 4, 5, 5), 4)
    gy = fill_random(x.shape, 5, "normal01")
    params = AffineParams(0.5 + fill_random((1, 1, 1, 4), 6, "uniform01").ravel(),
                          np.zeros(4))
    expected = gy.sum(axis=(0, 2, 3))
    cfg = LcnConfig(2, 3, 3)
    _, st = lcn_forward(x, cfg, params)
    assert np.allclose(lcn_backward(gy, x, cfg, params, st).grad_beta, expected,
                       rtol=1e-12)
    for op, config, forward in (
        ("gn", {"groups": 2, "eps": 1e-5}, lambda: gn_forward(x, 2, 1e-5, params)),
        ("ln", {"eps": 1e-5}, lambda: ln_forward(x, 1e-5, params)),
    ):
        _, st = forward()
        got = reference_backward(op, gy, x, config, params, st).grad_beta
        assert np.allclose(got, expected, rtol=1e-12)


def test_spec_fd_case():
    x = ramped((1, 2, 6, 6), 7)
    cfg = LcnConfig(c_group=2, p=3, q=3, eps=1e-3)
    params = AffineParams(np.array([1.2, 0.8]), np.array([0.3, -0.3]))
    report = finite_diff_check("lcn", x, cfg, params, step=1e-4, seed=11)
    assert report.max_rel_err < 1e-4


@pytest.mark.parametrize("op,config", [
    ("gn", {"groups": 2, "eps": 1e-5}),
    ("in", {"eps": 1e-3}),
    ("ln", {"eps": 1e-5}),
    ("bn", {"eps": 1e-3}),
])
def test_reference_fd(op, config):
    x = ramped((2, 4, 5, 5), 13)
    params = AffineParams(0.5 + fill_random((1, 1, 1, 4), 1, "uniform01").ravel(),
                          fill_random((1, 1, 1, 4), 2, "uniform01").ravel() - 0.5)
    report = finite_diff_check(op, x, config, params, step=1e-4, seed=17)
    assert report.max_rel_err < 1e-4


def test_gn_one_group_backward_equals_ln_bitwise():
    x = ramped((1, 3, 4, 4), 19)
    gy = fill_random(x.shape, 20, "normal01")
    params = AffineParams.identity(3)
    _, st = gn_forward(x, 1, 1e-5, params)
    a = reference_backward("gn", gy, x, {"groups": 1, "eps": 1e-5}, params, st)
    b = reference_backward("ln", gy, x, {"eps": 1e-5}, params, st)
    assert np.array_equal(a.grad_x, b.grad_x)
    assert np.array_equal(a.grad_gamma, b.grad_gamma)


def test_bn_eval_backward_has_no_stat_term():
    from lcnorm import RunningStats, bn_forward

    x = ramped((2, 2, 4, 4), 23)
    params = AffineParams(np.array([2.0, 0.5]), np.zeros(2))
    running = RunningStats(np.array([0.1, -0.2]), np.array([1.5, 0.7]))
    _, st = bn_forward(x, 1e-5, params, running=running, training=False)
    gy = fill_random(x.shape, 24, "normal01")
    b = reference_backward("bn", gy, x, {"eps": 1e-5, "training": False}, params, st)
    inv = 1.0 / np.sqrt(st.var + 1e-5)
    assert np.allclose(b.grad_x, gy * params.gamma.reshape(1, 2, 1, 1) * inv, rtol=1e-12)


def test_fd_convergence_roughly_quadratic():
    x = ramped((1, 2, 5, 5), 29)
    cfg = LcnConfig(1, 3, 3, eps=1e-3)
    params = AffineParams.identity(2)
    coarse = finite_diff_check("lcn", x, cfg, params, step=1e-2, seed=31)
    fine = finite_diff_check("lcn", x, cfg, params, step=1e-4, seed=31)
    assert fine.max_rel_err < 1e-4
    assert coarse.max_rel_err / max(fine.max_rel_err, 1e-14) > 30.0


def test_fd_grad_beta_exact_to_rounding():
    x = ramped((1, 2, 4, 4), 37)
    report = finite_diff_check("lcn", x, LcnConfig(2, 3, 3, eps=1e-3),
                               AffineParams.identity(2), step=1e-4, seed=41)
    assert report.component_rel["grad_beta"] < 1e-10


def test_degenerate_variance_rejected():
    x = np.full((1, 2, 4, 4), 3.0)
    with pytest.raises(DegenerateInputError):
        finite_diff_check("lcn", x, LcnConfig(2, 3, 3), AffineParams.identity(2))


def test_shape_mismatch_rejected():
    x = ramped((1, 2, 4, 4), 43)
    cfg = LcnConfig(2, 3, 3)
    params = AffineParams.identity(2)
    _, st = lcn_forward(x, cfg, params)
    with pytest.raises(ShapeError):
        lcn_backward(np.ones((1, 2, 4, 5)), x, cfg, params, st)


def test_stats_config_mismatch_rejected():
    x = ramped((1, 2, 6, 6), 47)
    params = AffineParams.identity(2)
    _, st = lcn_forward(x, LcnConfig(2, 3, 3), params)
    with pytest.raises(StateError):
        lcn_backward(np.ones_like(x), x, LcnConfig(2, 5, 5), params, st)


@pytest.mark.parametrize("mode", ["sliding", "tiled"])
def test_adjoint_identity(mode):
    x = ramped((1, 4, 6, 6), 53)
    cfg = LcnConfig(2, 3, 4, mode=mode, eps=1e-3)
    params = AffineParams(0.5 + fill_random((1, 1, 1, 4), 3, "uniform01").ravel(),
                          np.zeros(4))
    assert adjoint_gap("lcn", x, cfg, params, seed=59) < 1e-10


def test_adjoint_identity_with_clamped_windows():
    x = ramped((1, 2, 5, 5), 61)
    cfg = LcnConfig(2, 9, 3, eps=1e-3)  # p exceeds H, window clamps to full rows
    assert adjoint_gap("lcn", x, cfg, AffineParams.identity(2), seed=67) < 1e-10


def test_backward_runtime_flat_in_window(timing_medians):
    x = fill_random((1, 8, 128, 128), 71, "uniform01")
    params = AffineParams.identity(8)
    gy = fill_random(x.shape, 72, "normal01")
    fns = []
    for side in (3, 31, 127):
        cfg = LcnConfig(2, side, side)
        _, st = lcn_forward(x, cfg, params)
        fns.append(lambda cfg=cfg, st=st: lcn_backward(gy, x, cfg, params, st))
    medians = timing_medians(fns)
    assert max(medians) / min(medians) < 1.5
