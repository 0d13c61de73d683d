"""
LPF1 binary field files.

Layout (little-endian): magic b"LPF1", int64 d, int64 n_components,
int64 resolution[d], float64 box_length[d], then complex128 coefficients,
component-major in C order over numpy FFT-ordered wavevectors.

Author: Hypocoax Team
"""

import io
import logging
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from ..errors import SystemFileError
from .spectral_field import SpectralField

logger = logging.getLogger(__name__)

MAGIC = b"LPF1"
MAX_DIMENSION = 3


def _read_exact(stream: BinaryIO, count: int, what: str) -> bytes:
    data = stream.read(count)
    if len(data) != count:
        raise SystemFileError(f"Truncated LPF1 file while reading {what}")
    return data


def read_lpf1_stream(stream: BinaryIO) -> SpectralField:
    if _read_exact(stream, 4, "magic") != MAGIC:
        raise SystemFileError("Not an LPF1 file (bad magic)")
    d, n_components = np.frombuffer(_read_exact(stream, 16, "header"), dtype="<i8")
    d, n_components = int(d), int(n_components)
    if not 1 <= d <= MAX_DIMENSION or n_components < 1:
        raise SystemFileError(f"Invalid LPF1 header: d={d}, n_components={n_components}")

    resolution = tuple(int(r) for r in np.frombuffer(_read_exact(stream, 8 * d, "resolution"), dtype="<i8"))
    box_length = tuple(float(b) for b in np.frombuffer(_read_exact(stream, 8 * d, "box length"), dtype="<f8"))
    if any(r < 1 for r in resolution):
        raise SystemFileError(f"Invalid LPF1 resolution {resolution}")

    shape = (n_components,) + resolution
    count = int(np.prod(shape))
    payload = np.frombuffer(_read_exact(stream, 16 * count, "payload"), dtype="<c16")
    if stream.read(1):
        raise SystemFileError("Trailing bytes after LPF1 payload")

    try:
        field = SpectralField(payload.reshape(shape).astype(np.complex128), box_length)
    except ValueError as e:
        raise SystemFileError(f"Invalid LPF1 field: {e}") from e
    logger.debug(f"Read LPF1 field {shape} on box {box_length}")
    return field


def read_lpf1(path: Union[str, Path]) -> SpectralField:
    with open(path, "rb") as stream:
        return read_lpf1_stream(stream)


def read_lpf1_bytes(data: bytes) -> SpectralField:
    return read_lpf1_stream(io.BytesIO(data))


def lpf1_bytes(field: SpectralField) -> bytes:
    header = np.asarray([field.d, field.n_components, *field.resolution], dtype="<i8").tobytes()
    box = np.asarray(field.box_length, dtype="<f8").tobytes()
    payload = np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes()
    return MAGIC + header + box + payload


def write_lpf1(field: SpectralField, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(lpf1_bytes(field))
    return path
