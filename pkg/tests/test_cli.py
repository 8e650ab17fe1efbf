"""Command-line contract: flags, exit codes, file formats."""

import subprocess
import sys

import numpy as np
import pytest

from lcnorm import (
    AffineParams,
    LcnConfig,
    fill_random,
    lcn_backward,
    lcn_forward,
    read_tensor,
    write_tensor,
)
from lcnorm.bench import parse_csv


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "lcnorm", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture
def workdir(tmp_path):
    x = fill_random((1, 4, 16, 16), 3, "uniform01", np.float32)
    write_tensor(x, tmp_path / "x.lcnt")
    write_tensor(np.full((1, 2, 4, 4), 7.0), tmp_path / "const.lcnt")
    return tmp_path


def test_apply_windowed_norm(workdir):
    res = run_cli(
        "apply", "--input", "x.lcnt", "--output", "y.lcnt", "--norm", "lcn",
        "--c-group", "2", "--window", "5x5", "--stats", "st", cwd=workdir,
    )
    assert res.returncode == 0, res.stderr
    x = read_tensor(workdir / "x.lcnt")
    y = read_tensor(workdir / "y.lcnt")
    assert y.shape == x.shape and y.dtype == x.dtype
    expect, stats = lcn_forward(x, LcnConfig(2, 5, 5), AffineParams.identity(4))
    assert np.array_equal(y, expect)
    mean = read_tensor(workdir / "st.mean.lcnt")
    var = read_tensor(workdir / "st.var.lcnt")
    assert np.array_equal(mean, stats.mean)
    assert np.array_equal(var, stats.var)


def test_apply_gamma_beta_files(workdir):
    write_tensor(np.full((1, 4, 1, 1), 2.0), workdir / "g.lcnt")
    write_tensor(np.full((1, 4, 1, 1), -1.0), workdir / "b.lcnt")
    res = run_cli(
        "apply", "--input", "x.lcnt", "--output", "y.lcnt", "--norm", "gn",
        "--c-group", "2", "--gamma", "g.lcnt", "--beta", "b.lcnt", cwd=workdir,
    )
    assert res.returncode == 0, res.stderr
    y = read_tensor(workdir / "y.lcnt")
    from lcnorm import gn_forward

    expect, _ = gn_forward(read_tensor(workdir / "x.lcnt"), 2, 1e-5,
                           AffineParams(np.full(4, 2.0), np.full(4, -1.0)))
    assert np.array_equal(y, expect)


def test_window_flag_incompatible_with_global_norms(workdir):
    res = run_cli("apply", "--input", "x.lcnt", "--output", "y.lcnt",
                  "--norm", "gn", "--window", "3x3", cwd=workdir)
    assert res.returncode == 2


def test_constant_input_writes_zeros(workdir):
    res = run_cli("apply", "--input", "const.lcnt", "--output", "z.lcnt",
                  "--norm", "lcn", "--c-group", "2", "--window", "3x3", cwd=workdir)
    assert res.returncode == 0, res.stderr
    assert not read_tensor(workdir / "z.lcnt").any()


def test_missing_input_exits_3(workdir):
    res = run_cli("apply", "--input", "nope.lcnt", "--output", "y.lcnt",
                  "--norm", "ln", cwd=workdir)
    assert res.returncode == 3
    assert "IoError" in res.stderr


def test_corrupt_file_exits_3(workdir):
    (workdir / "bad.lcnt").write_bytes(b"XXXX" + b"\x00" * 20)
    res = run_cli("apply", "--input", "bad.lcnt", "--output", "y.lcnt",
                  "--norm", "ln", cwd=workdir)
    assert res.returncode == 3


def test_bad_group_exits_4(workdir):
    res = run_cli("apply", "--input", "x.lcnt", "--output", "y.lcnt",
                  "--norm", "lcn", "--c-group", "3", "--window", "3x3", cwd=workdir)
    assert res.returncode == 4
    assert "GroupError" in res.stderr


def test_check_reductions_suite(workdir):
    res = run_cli("check", "--suite", "reductions", "--trials", "5", "--seed", "7",
                  cwd=workdir)
    assert res.returncode == 0, res.stderr
    assert "reductions: PASS" in res.stdout


def test_check_zero_trials_exits_2(workdir):
    res = run_cli("check", "--suite", "oracle", "--trials", "0", cwd=workdir)
    assert res.returncode == 2


def test_bench_csv_parseable(workdir):
    res = run_cli("bench", "--dims", "1x4x48x48", "--windows", "3,9",
                  "--c-group", "2", "--reps", "5", "--csv", "bench.csv", cwd=workdir)
    assert res.returncode == 0, res.stderr
    records = parse_csv((workdir / "bench.csv").read_text())
    fast = [r for r in records if r.op == "lcn"]
    assert [r.p for r in fast] == [3, 9]
    assert all(r.reps == 5 and r.median_ns > 0 for r in records)
    assert "flatness ratio" in res.stdout


def test_bench_window_one_valid(workdir):
    res = run_cli("bench", "--dims", "1x2x24x24", "--windows", "1",
                  "--c-group", "1", "--reps", "5", "--csv", "one.csv", cwd=workdir)
    assert res.returncode == 0, res.stderr


def test_bench_empty_windows_exits_2(workdir):
    res = run_cli("bench", "--dims", "1x2x24x24", "--windows", "", "--reps", "5",
                  cwd=workdir)
    assert res.returncode == 2


def test_bench_unwritable_csv_exits_3(workdir):
    res = run_cli("bench", "--dims", "1x2x24x24", "--windows", "3", "--c-group", "1",
                  "--reps", "5", "--csv", "no/such/dir/out.csv", cwd=workdir)
    assert res.returncode == 3


def test_grad_subcommand_matches_api(workdir):
    x = read_tensor(workdir / "x.lcnt")
    gy = fill_random(x.shape, 11, "normal01", np.float32)
    write_tensor(gy, workdir / "gy.lcnt")
    res = run_cli(
        "grad", "--input", "x.lcnt", "--grad-output", "gy.lcnt", "--norm", "lcn",
        "--c-group", "2", "--window", "5x5",
        "--out-grad-x", "gx.lcnt", "--out-grad-gamma", "gg.lcnt",
        "--out-grad-beta", "gb.lcnt", cwd=workdir,
    )
    assert res.returncode == 0, res.stderr
    cfg = LcnConfig(2, 5, 5)
    params = AffineParams.identity(4)
    _, stats = lcn_forward(x, cfg, params)
    bundle = lcn_backward(gy, x, cfg, params, stats)
    assert np.array_equal(read_tensor(workdir / "gx.lcnt"),
                          bundle.grad_x.astype(np.float32))
    assert np.array_equal(read_tensor(workdir / "gg.lcnt").ravel(), bundle.grad_gamma)
    assert np.array_equal(read_tensor(workdir / "gb.lcnt").ravel(), bundle.grad_beta)


def test_apply_large_window_on_large_map(workdir):
    # 227x227 window with 2 channels per group on a 512x512 feature map
    x = fill_random((1, 4, 512, 512), 21, "uniform01", np.float32)
    write_tensor(x, workdir / "big.lcnt")
    res = run_cli("apply", "--input", "big.lcnt", "--output", "bigout.lcnt",
                  "--norm", "lcn", "--c-group", "2", "--window", "227x227",
                  cwd=workdir)
    assert res.returncode == 0, res.stderr
    y = read_tensor(workdir / "bigout.lcnt")
    assert y.shape == x.shape and y.dtype == x.dtype
    assert np.isfinite(y).all()


def test_threads_flag_does_not_change_output(workdir):
    for threads in ("1", "4"):
        res = run_cli("apply", "--input", "x.lcnt", "--output", f"t{threads}.lcnt",
                      "--norm", "lcn", "--c-group", "2", "--window", "5x5",
                      "--threads", threads, cwd=workdir)
        assert res.returncode == 0, res.stderr
    a = (workdir / "t1.lcnt").read_bytes()
    b = (workdir / "t4.lcnt").read_bytes()
    assert a == b
