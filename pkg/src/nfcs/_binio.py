"""Low-level helpers shared by the binary file formats.

All formats are little-endian: an 8-byte ASCII magic, a u32 version,
format-specific integer fields, then raw float64 payloads.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np


class FormatError(ValueError):
    """File does not parse as the expected binary format."""


def write_magic(fh: BinaryIO, magic: bytes, version: int) -> None:
    if len(magic) != 8:
        raise ValueError("magic must be 8 bytes")
    fh.write(magic)
    fh.write(struct.pack("<I", version))


def read_magic(fh: BinaryIO, magic: bytes, max_version: int) -> int:
    got = fh.read(8)
    if got != magic:
        raise FormatError(f"bad magic: expected {magic!r}, got {got!r}")
    version = read_u32(fh)
    if not (1 <= version <= max_version):
        raise FormatError(f"unsupported version {version}")
    return version


def read_exact(fh: BinaryIO, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file: wanted {n} bytes, got {len(buf)}")
    return buf


def write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def read_u32(fh: BinaryIO) -> int:
    return struct.unpack("<I", read_exact(fh, 4))[0]


def write_u64(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<Q", value))


def read_u64(fh: BinaryIO) -> int:
    return struct.unpack("<Q", read_exact(fh, 8))[0]


def write_u8(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<B", value))


def read_u8(fh: BinaryIO) -> int:
    return struct.unpack("<B", read_exact(fh, 1))[0]


def write_f64_array(fh: BinaryIO, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_f64_array(fh: BinaryIO, count: int) -> np.ndarray:
    buf = read_exact(fh, 8 * count)
    return np.frombuffer(buf, dtype="<f8", count=count).astype(np.float64)


def write_complex_interleaved(fh: BinaryIO, arr: np.ndarray) -> None:
    """Write a complex array as interleaved (re, im) f64 in C order of arr."""
    flat = np.ascontiguousarray(arr).ravel()
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    fh.write(inter.tobytes())


def read_complex_interleaved(fh: BinaryIO, shape: tuple) -> np.ndarray:
    count = int(np.prod(shape)) if shape else 1
    raw = read_f64_array(fh, 2 * count)
    out = raw[0::2] + 1j * raw[1::2]
    return out.reshape(shape).astype(np.complex128)
