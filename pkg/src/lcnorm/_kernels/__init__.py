"""Kernel backend selection.

The hot kernels (integral-table build, grouped box sums, direct window
statistics) exist twice: a compiled Cython extension and a pure-numpy
fallback with identical contracts.  The compiled core is preferred when
importable; ``LCNORM_BACKEND`` or :func:`set_backend` overrides the choice.
"""

from __future__ import annotations

import os

from . import _pycore

try:
    from . import _fastcore
except ImportError:
    _fastcore = None

HAVE_COMPILED = _fastcore is not None

_IMPLS = {"python": _pycore}
if HAVE_COMPILED:
    _IMPLS["compiled"] = _fastcore


def _initial_backend() -> str:
    env = os.environ.get("LCNORM_BACKEND", "auto")
    if env == "auto":
        return "compiled" if HAVE_COMPILED else "python"
    if env not in ("compiled", "python"):
        raise ValueError(f"LCNORM_BACKEND must be auto, compiled or python, got {env!r}")
    if env == "compiled" and not HAVE_COMPILED:
        raise ImportError("LCNORM_BACKEND=compiled but the extension is not built")
    return env


_active = _initial_backend()


def get_backend() -> str:
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def set_backend(name: str) -> None:
    """Select 'compiled', 'python', or 'auto' (prefer compiled)."""
    global _active
    if name == "auto":
        _active = "compiled" if HAVE_COMPILED else "python"
        return
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


def build_table(src, threads: int = 0):
    return _IMPLS[_active].build_table(src)


def grouped_box_sums(table, c0, c1, h0, h1, w0, w1, threads: int = 0):
    return _IMPLS[_active].grouped_box_sums(table, c0, c1, h0, h1, w0, w1, threads)


def fused_normalize(x, mean_g, inv_g, gamma, beta, c_group, out, threads: int = 0):
    return _IMPLS[_active].fused_normalize(x, mean_g, inv_g, gamma, beta, c_group, out, threads)


def naive_group_stats(x, c0, c1, h0, h1, w0, w1, threads: int = 0):
    return _IMPLS[_active].naive_group_stats(x, c0, c1, h0, h1, w0, w1, threads)


def naive_forward(x, c0, c1, h0, h1, w0, w1, gamma, beta, eps, out, threads: int = 0):
    return _IMPLS[_active].naive_forward(x, c0, c1, h0, h1, w0, w1, gamma, beta, eps,
                                         out, threads)


def adjoint_box_scatter(fields, starts_h, starts_w, lo_h, hi_h, lo_w, hi_w,
                        threads: int = 0):
    return _IMPLS[_active].adjoint_box_scatter(fields, starts_h, starts_w,
                                               lo_h, hi_h, lo_w, hi_w, threads)
