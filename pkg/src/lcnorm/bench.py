"""Benchmark harness for the constant-runtime claim.

Times the summed-area-table forward against the direct-summation path over
a list of window sizes, with warmup and median-of-repetitions so scheduler
noise does not move the flatness ratio.  Records round-trip through the CSV
schema exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import integral, _kernels
from .norms import AffineParams, LcnConfig, NormStats, grouped_normalize, lcn_forward
from .tensor import fill_random, validate_tensor

CSV_HEADER = "op,B,C,H,W,p,q,c_group,mode,reps,median_ns,throughput_eps"

NAIVE_WINDOW_CAP = 31  # beyond this the O(p*q) path only burns time
WARMUP_RUNS = 2
BENCH_SEED = 20240811


@dataclass(frozen=True)
class BenchRecord:
    op: str
    B: int
    C: int
    H: int
    W: int
    p: int
    q: int
    c_group: int
    mode: str
    reps: int
    median_ns: int
    throughput_eps: float

    def csv_row(self) -> str:
        return (
            f"{self.op},{self.B},{self.C},{self.H},{self.W},{self.p},{self.q},"
            f"{self.c_group},{self.mode},{self.reps},{self.median_ns},"
            f"{self.throughput_eps!r}"
        )

    @classmethod
    def from_csv_row(cls, row: str) -> "BenchRecord":
        parts = row.split(",")
        if len(parts) != 12:
            raise ValueError(f"expected 12 CSV fields, got {len(parts)}")
        return cls(
            op=parts[0],
            B=int(parts[1]), C=int(parts[2]), H=int(parts[3]), W=int(parts[4]),
            p=int(parts[5]), q=int(parts[6]), c_group=int(parts[7]), mode=parts[8],
            reps=int(parts[9]), median_ns=int(parts[10]),
            throughput_eps=float(parts[11]),
        )


def naive_window_forward(x: np.ndarray, cfg: LcnConfig, params: AffineParams,
                         threads: int = 0, with_stats: bool = False):
    """Direct O(window)-per-position forward; the benchmark comparison path.

    Same boundary semantics as the fast path (shared range vectors); cost
    grows with the window area instead of staying constant.  Full-size stats
    maps are only materialized on request so the timing reflects the window
    algorithm, not bookkeeping.
    """
    x = validate_tensor(x)
    B, C, H, W = x.shape
    cfg.check(C)
    params.check(C)
    vecs = integral._range_vectors((C, H, W), cfg.c_group, cfg.p, cfg.q, cfg.mode)

    if not with_stats:
        gamma = np.asarray(params.gamma, np.float64)
        beta = np.asarray(params.beta, np.float64)
        y = np.empty(x.shape, dtype=x.dtype)
        for b in range(B):
            _kernels.naive_forward(x[b], *vecs, gamma, beta, cfg.eps, y[b], threads)
        return y, None

    x64 = x.astype(np.float64, copy=False)

    mean_g = np.empty((B, C // cfg.c_group, H, W))
    var_g = np.empty_like(mean_g)
    for b in range(B):
        m, v = _kernels.naive_group_stats(x64[b], *vecs, threads)
        mean_g[b] = m
        var_g[b] = v
    y = grouped_normalize(x, x64, mean_g, var_g, cfg, params)
    n_sp = integral.window_counts((C, H, W), cfg.c_group, cfg.p, cfg.q, cfg.mode)
    stats = NormStats(
        mean=np.repeat(mean_g, cfg.c_group, axis=1),
        var=np.repeat(var_g, cfg.c_group, axis=1),
        n_map=np.broadcast_to(n_sp, x.shape),
    )
    return y, stats


def median_ns(fn, reps: int, warmup: int = WARMUP_RUNS) -> int:
    return interleaved_medians([fn], reps, warmup)[0]


def interleaved_medians(fns, reps: int, warmup: int = WARMUP_RUNS) -> list[int]:
    """Median wall time per callable, sampling reps round-robin.

    Interleaving the repetitions across the candidates cancels slow machine
    drift that would otherwise bias whichever candidate is measured first.
    """
    for fn in fns:
        for _ in range(warmup):
            fn()
    samples: list[list[int]] = [[] for _ in fns]
    for _ in range(reps):
        for k, fn in enumerate(fns):
            t0 = time.perf_counter_ns()
            fn()
            samples[k].append(time.perf_counter_ns() - t0)
    return [int(np.median(s)) for s in samples]


def bench_windows(dims, window_list, c_group: int, mode: str, reps: int,
                  threads: int = 0, include_naive: bool = True,
                  naive_cap: int = NAIVE_WINDOW_CAP, seed: int = BENCH_SEED):
    """One fast-path record per window, plus naive records up to the cap.

    Returns (records, flatness) where flatness is max/min of the fast-path
    medians.
    """
    B, C, H, W = dims
    x = fill_random(dims, seed, "uniform01", dtype=np.float32)
    params = AffineParams.identity(C)
    elems = B * C * H * W

    plan = []  # (op, p, q, closure)
    for win in window_list:
        p, q = win if isinstance(win, tuple) else (win, win)
        cfg = LcnConfig(c_group=c_group, p=p, q=q, mode=mode)
        plan.append(("lcn", p, q,
                     lambda cfg=cfg: lcn_forward(x, cfg, params, threads)))
        if include_naive and max(p, q) <= naive_cap:
            plan.append(("lcn_naive", p, q,
                         lambda cfg=cfg: naive_window_forward(x, cfg, params, threads)))

    medians = interleaved_medians([entry[3] for entry in plan], reps)
    records = [
        BenchRecord(op, B, C, H, W, p, q, c_group, mode, reps, med,
                    elems / (med * 1e-9))
        for (op, p, q, _), med in zip(plan, medians)
    ]
    fast_medians = [r.median_ns for r in records if r.op == "lcn"]
    flatness = max(fast_medians) / min(fast_medians)
    return records, flatness


def to_csv(records) -> str:
    return "\n".join([CSV_HEADER] + [r.csv_row() for r in records]) + "\n"


def parse_csv(text: str) -> list[BenchRecord]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing or unexpected CSV header")
    return [BenchRecord.from_csv_row(ln) for ln in lines[1:]]
