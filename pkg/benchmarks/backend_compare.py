#!/usr/bin/env python3
"""Compare the compiled kernel core against the pure-numpy fallback.

Times the windowed forward and backward on both backends across window
sizes and prints a table plus the per-operation speedup.  Run after an
editable install:

    python benchmarks/backend_compare.py [--dims BxCxHxW] [--reps N]
"""

import argparse

import lcnorm
from lcnorm import AffineParams, LcnConfig, fill_random, lcn_backward, lcn_forward
from lcnorm._kernels import HAVE_COMPILED
from lcnorm.bench import interleaved_medians

import numpy as np


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dims", default="1x32x256x256")
    parser.add_argument("--windows", default="7,31,127")
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()

    if not HAVE_COMPILED:
        print("compiled extension not built; nothing to compare")
        return 1

    dims = tuple(int(t) for t in args.dims.split("x"))
    windows = [int(t) for t in args.windows.split(",")]
    x = fill_random(dims, 7, "uniform01", np.float32)
    params = AffineParams.identity(dims[1])

    print(f"{'op':18s} {'window':>6s} {'compiled':>12s} {'python':>12s} {'speedup':>8s}")
    for side in windows:
        cfg = LcnConfig(c_group=2, p=side, q=side)
        y, stats = lcn_forward(x, cfg, params)
        gy = np.ones_like(x)

        def fwd():
            lcn_forward(x, cfg, params)

        def bwd():
            lcn_backward(gy, x, cfg, params, stats)

        for name, fn in (("forward", fwd), ("backward", bwd)):
            medians = {}
            for backend in ("compiled", "python"):
                lcnorm.set_backend(backend)
                medians[backend] = interleaved_medians([fn], args.reps)[0]
            lcnorm.set_backend("auto")
            print(f"{name:18s} {side:6d} {medians['compiled']/1e6:10.2f}ms "
                  f"{medians['python']/1e6:10.2f}ms "
                  f"{medians['python']/medians['compiled']:7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
