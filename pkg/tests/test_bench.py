"""Benchmark harness: CSV schema round-trip and naive-path equivalence."""

import numpy as np
import pytest

from lcnorm import AffineParams, LcnConfig, fill_random, lcn_naive
from lcnorm.bench import (
    BenchRecord,
    bench_windows,
    naive_window_forward,
    parse_csv,
    to_csv,
)


@pytest.mark.parametrize("mode", ["sliding", "tiled"])
def test_naive_window_forward_equals_oracle(mode):
    x = fill_random((2, 4, 9, 11), 7, "uniform01")
    cfg = LcnConfig(2, 3, 4, mode=mode, eps=1e-4)
    params = AffineParams(np.array([1.0, 2.0, 0.5, 1.5]), np.array([0.0, 1.0, -1.0, 0.25]))
    ref, ref_stats = lcn_naive(x, cfg, params)
    fast_path, _ = naive_window_forward(x, cfg, params, with_stats=False)
    two_step, stats = naive_window_forward(x, cfg, params, with_stats=True)
    scale = np.abs(ref).max()
    assert np.abs(fast_path - ref).max() < 1e-9 * scale
    assert np.abs(two_step - ref).max() < 1e-9 * scale
    assert np.array_equal(stats.n_map, ref_stats.n_map)


def test_single_element_window_outputs_beta():
    x = fill_random((1, 2, 6, 6), 9, "uniform01")
    params = AffineParams(np.ones(2), np.array([0.5, -0.5]))
    y, _ = naive_window_forward(x, LcnConfig(1, 1, 1), params, with_stats=True)
    assert np.allclose(y[0, 0], 0.5, atol=1e-12)
    assert np.allclose(y[0, 1], -0.5, atol=1e-12)


def test_csv_round_trip_exact():
    records, _ = bench_windows((1, 4, 32, 32), [3, 5], 2, "sliding", 5)
    assert any(r.op == "lcn_naive" for r in records)
    back = parse_csv(to_csv(records))
    assert back == records


def test_csv_header_and_naive_cap():
    records, flatness = bench_windows((1, 2, 40, 40), [3, 33], 1, "sliding", 5)
    text = to_csv(records)
    assert text.splitlines()[0] == "op,B,C,H,W,p,q,c_group,mode,reps,median_ns,throughput_eps"
    naive_windows = [r.p for r in records if r.op == "lcn_naive"]
    assert naive_windows == [3]  # 33 exceeds the naive cap
    assert flatness >= 1.0


def test_parse_rejects_bad_header():
    with pytest.raises(ValueError):
        parse_csv("nope\n1,2,3\n")


def test_record_fields_round_trip_floats():
    rec = BenchRecord("lcn", 1, 2, 3, 4, 5, 6, 2, "sliding", 5, 123456789,
                      1234567.8901234567)
    assert BenchRecord.from_csv_row(rec.csv_row()) == rec
