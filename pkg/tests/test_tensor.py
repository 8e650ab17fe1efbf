"""Tensor container and LCNT file format tests."""

import struct

import numpy as np
import pytest

from lcnorm import (
    DataError,
    DimError,
    FormatError,
    TruncationError,
    UnsupportedDtype,
    fill_random,
    read_tensor,
    write_tensor,
)
from lcnorm.tensor import HEADER_SIZE


def _header(dtype_code=0, dims=(1, 1, 1, 1), magic=b"LCNT", version=1):
    return struct.pack("<4sBB4H", magic, version, dtype_code, *dims)


def test_single_element_roundtrip(tmp_path):
    path = tmp_path / "one.lcnt"
    path.write_bytes(_header() + struct.pack("<f", 1.0))
    t = read_tensor(path)
    assert t.shape == (1, 1, 1, 1)
    assert t.dtype == np.float32
    assert t[0, 0, 0, 0] == 1.0


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.lcnt"
    path.write_bytes(_header(magic=b"XXXX") + struct.pack("<f", 1.0))
    with pytest.raises(FormatError):
        read_tensor(path)


def test_bad_version(tmp_path):
    path = tmp_path / "v2.lcnt"
    path.write_bytes(_header(version=2) + struct.pack("<f", 1.0))
    with pytest.raises(FormatError):
        read_tensor(path)


def test_unknown_dtype_code(tmp_path):
    path = tmp_path / "dt.lcnt"
    path.write_bytes(_header(dtype_code=2) + struct.pack("<f", 1.0))
    with pytest.raises(UnsupportedDtype):
        read_tensor(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "short.lcnt"
    path.write_bytes(_header(dtype_code=1, dims=(1, 1, 2, 2)) + b"\x00" * 12)
    with pytest.raises(TruncationError):
        read_tensor(path)


def test_trailing_garbage(tmp_path):
    path = tmp_path / "long.lcnt"
    path.write_bytes(_header() + struct.pack("<f", 1.0) + b"!")
    with pytest.raises(FormatError):
        read_tensor(path)


def test_nonfinite_payload(tmp_path):
    path = tmp_path / "nan.lcnt"
    path.write_bytes(_header() + struct.pack("<f", float("nan")))
    with pytest.raises(DataError):
        read_tensor(path)


def test_roundtrip_real64_bit_exact(tmp_path):
    x = fill_random((2, 3, 4, 5), 99, "normal01")
    path = tmp_path / "r.lcnt"
    write_tensor(x, path)
    back = read_tensor(path)
    assert back.dtype == np.float64
    assert back.tobytes() == x.tobytes()
    # writing the same tensor twice produces identical files
    path2 = tmp_path / "r2.lcnt"
    write_tensor(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_file_size_header_plus_payload(tmp_path):
    x = np.zeros((1, 2, 2, 2), dtype=np.float32)
    path = tmp_path / "z.lcnt"
    write_tensor(x, path)
    assert path.stat().st_size == HEADER_SIZE + 8 * 4
    assert HEADER_SIZE == 14


def test_write_nan_rejected_before_any_bytes(tmp_path):
    x = np.ones((1, 1, 2, 2))
    x[0, 0, 0, 1] = np.nan
    path = tmp_path / "never.lcnt"
    with pytest.raises(DataError):
        write_tensor(x, path)
    assert not path.exists()


def test_zero_dim_rejected(tmp_path):
    path = tmp_path / "dims.lcnt"
    path.write_bytes(_header(dims=(1, 0, 1, 1)))
    with pytest.raises(DimError):
        read_tensor(path)


def test_fill_random_deterministic():
    a = fill_random((2, 2, 4, 4), 7, "uniform01")
    b = fill_random((2, 2, 4, 4), 7, "uniform01")
    assert np.array_equal(a, b)


def test_fill_random_seeds_differ():
    a = fill_random((1, 1, 8, 8), 1, "uniform01")
    b = fill_random((1, 1, 8, 8), 2, "uniform01")
    assert (a != b).any()


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_uniform01_range(dtype):
    x = fill_random((1, 4, 16, 16), 3, "uniform01", dtype)
    assert x.dtype == dtype
    assert x.min() >= 0.0
    assert x.max() < 1.0


def test_normal01_statistics():
    x = fill_random((1, 4, 64, 64), 5, "normal01")
    assert np.isfinite(x).all()
    assert abs(x.mean()) < 0.05
    assert abs(x.std() - 1.0) < 0.05


def test_fill_random_zero_dim():
    with pytest.raises(DimError):
        fill_random((1, 0, 2, 2), 1)


def test_indexing_law():
    B, C, H, W = 2, 3, 4, 5
    x = np.empty((B, C, H, W))
    for b in range(B):
        for c in range(C):
            for h in range(H):
                for w in range(W):
                    x[b, c, h, w] = ((b * C + c) * H + h) * W + w
    assert np.array_equal(x.ravel(), np.arange(B * C * H * W, dtype=np.float64))
