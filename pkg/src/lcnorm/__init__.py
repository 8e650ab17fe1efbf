"""Windowed feature normalization with constant-time summed-area-table kernels.

Per-position mean/variance over a spatial window and channel group, the
global normalization family (group/instance/layer/batch plus the Gaussian
contrast baseline), exact backward passes, slow reference oracles, and a
benchmark harness.  Hot kernels run through a compiled extension when built,
with a pure-numpy fallback selected at import.
"""

from ._kernels import available_backends, get_backend, set_backend
from .errors import (
    DataError,
    DegenerateInputError,
    DimError,
    FormatError,
    GroupError,
    IoError,
    LcnError,
    RangeError,
    ShapeError,
    StateError,
    TruncationError,
    UnsupportedDtype,
)
from .grad import GradBundle, adjoint_gap, finite_diff_check, lcn_backward, reference_backward
from .integral import Integral3, box_sum, box_sums_all, build_integral
from .norms import (
    AffineParams,
    LcnConfig,
    LrnConfig,
    NormStats,
    RunningStats,
    affine,
    bn_forward,
    gn_forward,
    in_forward,
    lcn_forward,
    ln_forward,
    lrn_forward,
)
from .oracle import family_naive, lcn_naive
from .tensor import fill_random, read_tensor, write_tensor

__version__ = "0.1.0"

__all__ = [
    "AffineParams",
    "DataError",
    "DegenerateInputError",
    "DimError",
    "FormatError",
    "GradBundle",
    "GroupError",
    "Integral3",
    "IoError",
    "LcnConfig",
    "LcnError",
    "LrnConfig",
    "NormStats",
    "RangeError",
    "RunningStats",
    "ShapeError",
    "StateError",
    "TruncationError",
    "UnsupportedDtype",
    "adjoint_gap",
    "affine",
    "available_backends",
    "bn_forward",
    "box_sum",
    "box_sums_all",
    "build_integral",
    "family_naive",
    "fill_random",
    "finite_diff_check",
    "get_backend",
    "gn_forward",
    "in_forward",
    "lcn_backward",
    "lcn_forward",
    "lcn_naive",
    "ln_forward",
    "lrn_forward",
    "read_tensor",
    "reference_backward",
    "set_backend",
    "write_tensor",
]
