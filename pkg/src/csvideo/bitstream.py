"""Golomb-Rice + zero-run coding and the ``CSW1`` container.

Values are zigzag folded (``v >= 0 -> 2v``, ``v < 0 -> -2v - 1``) and written
as a unary quotient (``q`` ones and a terminating zero) followed by a ``k``
bit remainder. Runs of zeros use a run mode: after four consecutive zero
symbols the coder writes how many further zeros follow, itself Golomb-Rice
coded with the same ``k``. See FORMAT.md for the byte layout.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .dwt3d import MEASURED_BANDS
from .errors import BitstreamError, ValidationError

MAGIC = b"CSW1"
MAX_K = 15
RUN_TRIGGER = 4
MODES = ("float", "fixed")

# magic, width, height, frames, gofs, levels, threshold (Q16.16, all ones =
# infinity), phi seed, M, N, coeff mode, duplicate flag
_HEADER = struct.Struct("<4sIIIIBIQIIBB")
HEADER_SIZE = _HEADER.size
_SEG_LEN = struct.Struct("<I")
THRESHOLD_INF = 0xFFFFFFFF


def zigzag(v: int) -> int:
    return 2 * v if v >= 0 else -2 * v - 1


def unzigzag(u: int) -> int:
    return u >> 1 if u % 2 == 0 else -((u + 1) >> 1)


def _rice(u: int, k: int) -> str:
    q = u >> k
    if k:
        return "1" * q + "0" + format(u & ((1 << k) - 1), f"0{k}b")
    return "1" * q + "0"


def gr_encode(values, k: int) -> str:
    """Encode signed integers to a '0'/'1' string."""
    if not 0 <= k <= MAX_K:
        raise ValidationError(f"Rice parameter must be in [0, {MAX_K}], got {k}")
    vals = [int(v) for v in values]
    out = []
    zeros = 0
    i = 0
    n = len(vals)
    while i < n:
        v = vals[i]
        out.append(_rice(zigzag(v), k))
        i += 1
        if v == 0:
            zeros += 1
            if zeros == RUN_TRIGGER:
                run = 0
                while i < n and vals[i] == 0:
                    run += 1
                    i += 1
                out.append(_rice(run, k))
                zeros = 0
        else:
            zeros = 0
    return "".join(out)


class BitReader:
    """Sequential reader over a '0'/'1' string; offsets reported in bytes."""

    def __init__(self, bits: str, base_offset: int = 0):
        self.bits = bits
        self.pos = 0
        self.base = base_offset

    @classmethod
    def from_bytes(cls, data: bytes, base_offset: int = 0) -> "BitReader":
        bits = format(int.from_bytes(data, "big"), f"0{8 * len(data)}b") if data else ""
        return cls(bits, base_offset)

    def _fail(self, what):
        raise BitstreamError(f"truncated bitstream while reading {what}", self.base + self.pos // 8)

    def read(self, n: int) -> int:
        if n == 0:
            return 0
        end = self.pos + n
        if end > len(self.bits):
            self._fail(f"{n} bits")
        v = int(self.bits[self.pos : end], 2)
        self.pos = end
        return v

    def read_unary(self) -> int:
        stop = self.bits.find("0", self.pos)
        if stop < 0:
            self._fail("unary quotient")
        q = stop - self.pos
        self.pos = stop + 1
        return q

    def read_rice(self, k: int) -> int:
        q = self.read_unary()
        return (q << k) | self.read(k)


def gr_decode(bits, k: int, count: int) -> list:
    if not 0 <= k <= MAX_K:
        raise ValidationError(f"Rice parameter must be in [0, {MAX_K}], got {k}")
    reader = bits if isinstance(bits, BitReader) else BitReader(bits)
    out = []
    zeros = 0
    while len(out) < count:
        v = unzigzag(reader.read_rice(k))
        out.append(v)
        if v == 0:
            zeros += 1
            if zeros == RUN_TRIGGER:
                run = reader.read_rice(k)
                if len(out) + run > count:
                    raise BitstreamError("zero run overflows value count", reader.base + reader.pos // 8)
                out.extend([0] * run)
                zeros = 0
        else:
            zeros = 0
    return out


def best_k(values) -> tuple:
    """Exhaustive search for the Rice parameter giving the shortest code."""
    best = None
    for k in range(MAX_K + 1):
        bits = gr_encode(values, k)
        if best is None or len(bits) < len(best[1]):
            best = (k, bits)
    return best


def bits_to_bytes(bits: str) -> bytes:
    pad = -len(bits) % 8
    bits += "0" * pad
    return int(bits, 2).to_bytes(len(bits) // 8, "big") if bits else b""


def delta_encode(values) -> list:
    """First value absolute, then successive differences."""
    vals = [int(v) for v in values]
    return vals[:1] + [b - a for a, b in zip(vals, vals[1:])]


def delta_decode(diffs) -> list:
    out = []
    acc = 0
    for i, d in enumerate(diffs):
        acc = d if i == 0 else acc + d
        out.append(acc)
    return out


@dataclass
class Header:
    width: int
    height: int
    frame_count: int
    gof_count: int
    levels: int
    threshold: float
    phi_seed: int
    M: int
    N: int
    coeff_mode: str = "fixed"
    duplicated: bool = False

    def lll_shape(self) -> tuple:
        s = 2**self.levels
        return self.height // s, self.width // s

    def band_sizes(self, band_id) -> int:
        which, name = band_id
        if name == "LL":
            h, w = self.lll_shape()
            return h * w
        return sum((self.height >> lev) * (self.width >> lev) for lev in range(1, self.levels + 1))

    def vectors_per_band(self, band_id) -> int:
        return -(-self.band_sizes(band_id) // self.N)

    def threshold_word(self) -> int:
        if math.isinf(self.threshold):
            return THRESHOLD_INF
        word = int(round(self.threshold * 65536))
        if not 0 <= word < THRESHOLD_INF:
            raise ValidationError(f"threshold {self.threshold} not representable in Q16.16")
        return word

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC, self.width, self.height, self.frame_count, self.gof_count,
            self.levels, self.threshold_word(), self.phi_seed & (2**64 - 1),
            self.M, self.N, MODES.index(self.coeff_mode), int(self.duplicated),
        )

    @classmethod
    def unpack(cls, data: bytes) -> "Header":
        if len(data) < HEADER_SIZE:
            raise BitstreamError(f"header needs {HEADER_SIZE} bytes, got {len(data)}", len(data))
        (magic, w, h, frames, gofs, levels, thr, seed, M, N, mode, dup) = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise BitstreamError(f"bad magic {magic!r}", 0)
        if mode >= len(MODES):
            raise BitstreamError(f"unknown coefficient mode {mode}", HEADER_SIZE - 2)
        if levels < 1 or M < 1 or N < 1 or w == 0 or h == 0:
            raise BitstreamError("inconsistent header fields", 0)
        threshold = math.inf if thr == THRESHOLD_INF else thr / 65536
        return cls(w, h, frames, gofs, levels, threshold, seed, M, N, MODES[mode], bool(dup))


@dataclass
class BandPayload:
    present: np.ndarray  # bool, one flag per vector
    measurements: np.ndarray  # (present.sum(), M) int64


@dataclass
class GofPayload:
    lll: np.ndarray  # int64, lll_shape
    bands: list = field(default_factory=list)  # 7 BandPayload in MEASURED_BANDS order


@dataclass
class Container:
    header: Header
    gofs: list = field(default_factory=list)


def encode_lll(lll) -> bytes:
    k, bits = best_k(delta_encode(np.asarray(lll).ravel()))
    return bits_to_bytes(format(k, "04b") + bits)


def decode_lll(data: bytes, shape, offset: int = 0) -> np.ndarray:
    reader = BitReader.from_bytes(data, offset)
    k = reader.read(4)
    vals = delta_decode(gr_decode(reader, k, shape[0] * shape[1]))
    return np.array(vals, dtype=np.int64).reshape(shape)


def encode_band(band: BandPayload) -> bytes:
    flags = "".join("1" if p else "0" for p in band.present)
    diffs = []
    for row in np.asarray(band.measurements):
        diffs.extend(delta_encode(row))
    k, bits = best_k(diffs)
    return bits_to_bytes(flags + format(k, "04b") + bits)


def decode_band(data: bytes, vectors: int, M: int, offset: int = 0) -> BandPayload:
    reader = BitReader.from_bytes(data, offset)
    present = np.array([reader.read(1) for _ in range(vectors)], dtype=bool)
    k = reader.read(4)
    n = int(present.sum())
    vals = gr_decode(reader, k, n * M)
    rows = [delta_decode(vals[i * M : (i + 1) * M]) for i in range(n)]
    meas = np.array(rows, dtype=np.int64).reshape(n, M)
    return BandPayload(present, meas)


def pack(container: Container) -> bytes:
    h = container.header
    if len(container.gofs) != h.gof_count:
        raise ValidationError(f"header declares {h.gof_count} GOFs, container has {len(container.gofs)}")
    parts = [h.pack()]
    for gof in container.gofs:
        if tuple(gof.lll.shape) != h.lll_shape():
            raise ValidationError(f"LLL shape {gof.lll.shape} != {h.lll_shape()}")
        if len(gof.bands) != len(MEASURED_BANDS):
            raise ValidationError(f"expected {len(MEASURED_BANDS)} band segments, got {len(gof.bands)}")
        segments = [encode_lll(gof.lll)]
        for band_id, band in zip(MEASURED_BANDS, gof.bands):
            if len(band.present) != h.vectors_per_band(band_id):
                raise ValidationError(f"band {band_id} has {len(band.present)} vectors, expected {h.vectors_per_band(band_id)}")
            segments.append(encode_band(band))
        for seg in segments:
            parts.append(_SEG_LEN.pack(len(seg)))
            parts.append(seg)
    return b"".join(parts)


def _segment(data, pos):
    if pos + _SEG_LEN.size > len(data):
        raise BitstreamError("truncated segment length", pos)
    (n,) = _SEG_LEN.unpack_from(data, pos)
    start = pos + _SEG_LEN.size
    if start + n > len(data):
        raise BitstreamError(f"segment of {n} bytes runs past end of stream", pos)
    return data[start : start + n], start, start + n


def unpack(data: bytes) -> Container:
    header = Header.unpack(data)
    pos = HEADER_SIZE
    gofs = []
    for _ in range(header.gof_count):
        seg, start, pos = _segment(data, pos)
        lll = decode_lll(seg, header.lll_shape(), start)
        bands = []
        for band_id in MEASURED_BANDS:
            seg, start, pos = _segment(data, pos)
            bands.append(decode_band(seg, header.vectors_per_band(band_id), header.M, start))
        gofs.append(GofPayload(lll, bands))
    if pos != len(data):
        raise BitstreamError(f"{len(data) - pos} trailing bytes after last segment", pos)
    return Container(header, gofs)


def compression_ratio(original_bits: int, coded_bits: int) -> float:
    if coded_bits <= 0:
        raise ValidationError("coded size must be positive")
    return original_bits / coded_bits


def measurement_percentage(width: int, height: int, M: int, levels: int, P: int = 2, measured_vectors=None) -> float:
    """Share of transmitted values (LLL + measurements) in the 2*W*H pair.

    ``measured_vectors`` defaults to every vector of every measured band.
    """
    if levels < 1 or height % (2**levels) or width % (2**levels):
        raise ValidationError(f"{levels} levels do not fit a {width}x{height} frame")
    lll = (height >> levels) * (width >> levels)
    if measured_vectors is None:
        hdr = Header(width, height, 2, 1, levels, 0.0, 0, max(M, 1), P * height // 2)
        measured_vectors = sum(hdr.vectors_per_band(b) for b in MEASURED_BANDS)
    return 100.0 * (lll + measured_vectors * M) / (2 * width * height)
