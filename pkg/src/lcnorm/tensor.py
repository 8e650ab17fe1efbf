"""Dense 4-D tensors in (B, C, H, W) layout and the LCNT binary file format.

A tensor is a plain C-contiguous ``numpy.ndarray`` with ``ndim == 4`` and
dtype float32 or float64 (``real32``/``real64``).  Element (b, c, h, w) lives
at flat index ``((b*C + c)*H + h)*W + w``, i.e. W is the fastest axis.

LCNT file layout (everything little-endian):

    bytes 0..3    magic "LCNT"
    byte  4       version, currently 1
    byte  5       dtype code: 0 = real32, 1 = real64
    bytes 6..13   dims B, C, H, W as four uint16
    bytes 14..    payload, dims product elements of IEEE-754, W fastest

The header is exactly 14 bytes; dimensions above 65535 are rejected on write.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import (
    DataError,
    DimError,
    FormatError,
    IoError,
    TruncationError,
    UnsupportedDtype,
)

MAGIC = b"LCNT"
VERSION = 1
HEADER_SIZE = 14
_HEADER_FMT = "<4sBB4H"

DTYPE_BY_CODE = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
CODE_BY_DTYPE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}

_MAX_DIM = 0xFFFF


def validate_tensor(x: np.ndarray, *, name: str = "tensor") -> np.ndarray:
    """Check the 4-D tensor contract; returns a C-contiguous view or copy."""
    x = np.asarray(x)
    if x.ndim != 4:
        raise DimError(f"{name} must be 4-D (B, C, H, W), got ndim={x.ndim}")
    if any(d < 1 for d in x.shape):
        raise DimError(f"{name} has a zero dimension: {x.shape}")
    if x.dtype not in CODE_BY_DTYPE:
        raise DimError(f"{name} dtype must be float32 or float64, got {x.dtype}")
    if not np.isfinite(x).all():
        raise DataError(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(x)


def read_tensor(path) -> np.ndarray:
    """Read an LCNT file into a (B, C, H, W) array, bit-exact to the payload."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < HEADER_SIZE:
        raise TruncationError(f"{path}: header truncated at {len(blob)} bytes")
    _, version, dtype_code, b, c, h, w = struct.unpack(_HEADER_FMT, blob[:HEADER_SIZE])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype_code not in DTYPE_BY_CODE:
        raise UnsupportedDtype(f"{path}: unknown dtype code {dtype_code}")
    dims = (b, c, h, w)
    if any(d < 1 for d in dims):
        raise DimError(f"{path}: zero dimension in header {dims}")

    dtype = DTYPE_BY_CODE[dtype_code]
    expected = b * c * h * w * dtype.itemsize
    payload = len(blob) - HEADER_SIZE
    if payload < expected:
        raise TruncationError(f"{path}: payload {payload} bytes, expected {expected}")
    if payload > expected:
        raise FormatError(f"{path}: {payload - expected} trailing bytes after payload")

    elems = np.frombuffer(blob, dtype=dtype, count=b * c * h * w, offset=HEADER_SIZE)
    x = elems.reshape(dims).astype(dtype.newbyteorder("="), copy=True)
    if not np.isfinite(x).all():
        raise DataError(f"{path}: payload contains NaN or Inf")
    return x


def write_tensor(x: np.ndarray, path) -> None:
    """Write an LCNT file that :func:`read_tensor` round-trips bit-exactly."""
    x = validate_tensor(x)
    if any(d > _MAX_DIM for d in x.shape):
        raise DimError(f"dimensions {x.shape} exceed the format limit {_MAX_DIM}")
    code = CODE_BY_DTYPE[x.dtype]
    header = struct.pack(_HEADER_FMT, MAGIC, VERSION, code, *x.shape)
    payload = x.astype(DTYPE_BY_CODE[code], copy=False).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Deterministic test-data generation.
#
# The stream is counter-based SplitMix64: element k of the raw stream is
# mix64(seed + (k + 1) * GOLDEN) where mix64 is the standard finalizer.  Pure
# uint64 arithmetic, so the same seed yields the same stream on every
# platform.  uniform01 keeps 53 mantissa bits for real64 and 24 for real32 so
# the cast never rounds up to 1.0; normal01 is Box-Muller over that stream.
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Elements [offset, offset+count) of the SplitMix64 stream for ``seed``."""
    with np.errstate(over="ignore"):
        ctr = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
        return _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + ctr * _GOLDEN)


def _uniform01(seed: int, count: int, dtype, offset: int = 0) -> np.ndarray:
    bits = splitmix64(seed, count, offset)
    if np.dtype(dtype) == np.float64:
        return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return ((bits >> np.uint64(40)).astype(np.float64) * (2.0 ** -24)).astype(np.float32)


def _normal01(seed: int, count: int, dtype, offset: int = 0) -> np.ndarray:
    pairs = (count + 1) // 2
    u1 = 1.0 - _uniform01(seed, pairs, np.float64, offset)        # (0, 1]
    u2 = _uniform01(seed, pairs, np.float64, offset + pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:count]
    return z.astype(dtype, copy=False)


def fill_random(dims, seed: int, dist: str = "uniform01", dtype=np.float64) -> np.ndarray:
    """Deterministic (B, C, H, W) tensor for a given seed and distribution."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4 or any(d < 1 for d in dims):
        raise DimError(f"dims must be four positive counts, got {dims}")
    if np.dtype(dtype) not in CODE_BY_DTYPE:
        raise DimError(f"dtype must be float32 or float64, got {dtype}")
    n = int(np.prod(dims))
    if dist == "uniform01":
        flat = _uniform01(seed, n, dtype)
    elif dist == "normal01":
        flat = _normal01(seed, n, dtype)
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    return flat.reshape(dims)
