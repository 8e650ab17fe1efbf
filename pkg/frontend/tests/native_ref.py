"""Compute reference outputs with the native library's Python API.

The equivalence tests compare the binding's results (which travel through
the LCNT wire format and the CLI) against direct in-process library calls.
Reads a JSON manifest of cases, writes LCNT outputs.

Usage: python3 native_ref.py manifest.json
"""

import json
import sys

import numpy as np

from lcnorm import (
    AffineParams,
    LcnConfig,
    gn_forward,
    lcn_backward,
    lcn_forward,
    read_tensor,
    write_tensor,
)


def affine_for(case, channels):
    gamma = (read_tensor(case["gamma"]).reshape(-1).astype(np.float64)
             if case.get("gamma") else np.ones(channels))
    beta = (read_tensor(case["beta"]).reshape(-1).astype(np.float64)
            if case.get("beta") else np.zeros(channels))
    return AffineParams(gamma, beta)


def main() -> int:
    with open(sys.argv[1]) as fh:
        manifest = json.load(fh)
    for case in manifest["cases"]:
        x = read_tensor(case["input"])
        params = affine_for(case, x.shape[1])
        if case["kind"] == "family_gn":
            y, stats = gn_forward(x, x.shape[1] // case["cGroup"], case["eps"], params)
            write_tensor(y, case["outY"])
            write_tensor(stats.mean, case["outMean"])
            write_tensor(stats.var, case["outVar"])
            continue

        cfg = LcnConfig(c_group=case["cGroup"], p=case["p"], q=case["q"],
                        mode=case["mode"], eps=case["eps"])
        y, stats = lcn_forward(x, cfg, params)
        if case["kind"] == "forward":
            write_tensor(y, case["outY"])
            write_tensor(stats.mean, case["outMean"])
            write_tensor(stats.var, case["outVar"])
        elif case["kind"] == "backward":
            grad_y = read_tensor(case["gradOutput"])
            bundle = lcn_backward(grad_y, x, cfg, params, stats)
            write_tensor(bundle.grad_x.astype(x.dtype), case["outGradX"])
            write_tensor(bundle.grad_gamma.reshape(1, -1, 1, 1), case["outGradGamma"])
            write_tensor(bundle.grad_beta.reshape(1, -1, 1, 1), case["outGradBeta"])
        else:
            raise ValueError(f"unknown case kind {case['kind']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
