"""Offline intensity records: binary persistence of per-realization data.

Layout (little endian):

    header, 96 bytes:
        magic   6s   b"GIDAT1"
        version B    1
        pad     B    0
        n       Q    record count (patched on close)
        points  I    detector pixel count P
        pad2    I    0
        pitch   d    detector pitch [m]
        origin  d    detector center [m]
        lam     d    wavelength [m]
        d1,d2,d d*3  geometry [m]
        seed    q
        sigma2  d
        phi     d    source aperture [m]
    body: n records of (1 + P) float64, scalar-arm intensity first, then the
          reference pattern pixels.

Round-trips are bitwise: the body is raw IEEE-754, so replaying a file feeds
the accumulator the exact numbers the live run produced.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import RecordFormatError

MAGIC = b"GIDAT1"
VERSION = 1
_HEADER = struct.Struct("<6sBBQIIddddddqdd")
HEADER_SIZE = _HEADER.size

assert HEADER_SIZE == 96


@dataclass(frozen=True)
class RecordHeader:
    """File-level metadata identifying the run that produced the records."""

    n_records: int
    detector_points: int
    detector_pitch: float
    detector_origin: float
    wavelength: float
    d1: float
    d2: float
    d: float
    seed: int
    sigma2: float
    phi: float

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC, VERSION, 0,
            self.n_records, self.detector_points, 0,
            self.detector_pitch, self.detector_origin, self.wavelength,
            self.d1, self.d2, self.d,
            self.seed, self.sigma2, self.phi,
        )

    @classmethod
    def unpack(cls, blob: bytes) -> "RecordHeader":
        if len(blob) < HEADER_SIZE:
            raise RecordFormatError("file too short for a record header")
        (magic, version, _pad, n, points, _pad2,
         pitch, origin, lam, d1, d2, d, seed, sigma2, phi) = _HEADER.unpack(
            blob[:HEADER_SIZE]
        )
        if magic != MAGIC:
            raise RecordFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise RecordFormatError(f"unsupported record version {version}")
        return cls(n, points, pitch, origin, lam, d1, d2, d, seed, sigma2, phi)


class RecordWriter:
    """Streams (i1, i2) batches to disk; the count is patched in on close."""

    def __init__(self, path, header: RecordHeader):
        self.path = Path(path)
        self.header = header
        self._count = 0
        self._file = open(self.path, "wb")
        self._file.write(header.pack())

    def append(self, i1: np.ndarray, i2: np.ndarray) -> None:
        i1 = np.asarray(i1, dtype=np.float64)
        i2 = np.asarray(i2, dtype=np.float64)
        if i1.ndim != 1 or i2.shape != (i1.shape[0], self.header.detector_points):
            raise ValueError("append expects i1 (B,) and i2 (B, P)")
        block = np.empty((i1.shape[0], 1 + i2.shape[1]), dtype=np.float64)
        block[:, 0] = i1
        block[:, 1:] = i2
        block.tofile(self._file)
        self._count += i1.shape[0]

    def close(self) -> None:
        if self._file.closed:
            return
        self._file.seek(0)
        final = RecordHeader(
            n_records=self._count,
            detector_points=self.header.detector_points,
            detector_pitch=self.header.detector_pitch,
            detector_origin=self.header.detector_origin,
            wavelength=self.header.wavelength,
            d1=self.header.d1,
            d2=self.header.d2,
            d=self.header.d,
            seed=self.header.seed,
            sigma2=self.header.sigma2,
            phi=self.header.phi,
        )
        self._file.write(final.pack())
        self._file.close()

    def __enter__(self) -> "RecordWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_records(path) -> tuple[RecordHeader, np.ndarray]:
    """Header plus a read-only (n, 1 + P) view of the stored intensities.

    The body is memory mapped, so multi-gigabyte files replay without being
    loaded whole.  Size mismatches (truncation, stray bytes) are rejected.
    """
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as fh:
        header = RecordHeader.unpack(fh.read(HEADER_SIZE))
    row = 1 + header.detector_points
    expected = HEADER_SIZE + header.n_records * row * 8
    if size != expected:
        raise RecordFormatError(
            f"file holds {size} bytes, header implies {expected} "
            f"({header.n_records} records of {row} float64)"
        )
    if header.n_records == 0:
        return header, np.empty((0, row), dtype=np.float64)
    body = np.memmap(path, dtype=np.float64, mode="r", offset=HEADER_SIZE,
                     shape=(header.n_records, row))
    return header, body
