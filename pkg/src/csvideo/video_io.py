"""Raw / PGM grayscale frame I/O and frame-pair grouping."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CodecIOError, ValidationError

FORMATS = ("raw", "pgm")


@dataclass(frozen=True)
class FramePair:
    first: np.ndarray
    second: np.ndarray
    duplicated: bool = False

    def __post_init__(self):
        if self.first.shape != self.second.shape:
            raise ValidationError(
                f"frame pair shapes differ: {self.first.shape} vs {self.second.shape}"
            )

    def __iter__(self):
        return iter((self.first, self.second))


def validate_dims(width: int, height: int, par: int = 1) -> None:
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise ValidationError(f"frame dimensions must be even and positive, got {width}x{height}")
    need = 2 * (2 * par + 1)
    if width < need or height < need:
        raise ValidationError(f"{width}x{height} frame smaller than one strip for P={par}")


def load_frames(path, fmt: str, width: int, height: int, count: int) -> list:
    """Read ``count`` luma frames as ``uint8`` arrays of shape (height, width)."""
    validate_dims(width, height)
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CodecIOError(f"cannot read {path}: {exc}") from exc
    if fmt == "raw":
        frame_bytes = width * height
        expected = frame_bytes * count
        if len(data) < expected:
            raise CodecIOError(f"{path}: expected {expected}, got {len(data)} bytes")
        arr = np.frombuffer(data, dtype=np.uint8, count=expected)
        return [f.copy() for f in arr.reshape(count, height, width)]
    if fmt == "pgm":
        return _parse_pgm_sequence(data, width, height, count, path)
    raise ValidationError(f"unknown format {fmt!r}, expected one of {FORMATS}")


_PGM_HEADER = re.compile(rb"P5(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


def _parse_pgm_sequence(data, width, height, count, path):
    frames = []
    pos = 0
    for i in range(count):
        m = _PGM_HEADER.match(data, pos)
        if m is None:
            raise CodecIOError(f"{path}: frame {i}: missing or bad P5 header at byte {pos}")
        w, h, maxval = (int(g) for g in m.groups())
        if (w, h) != (width, height):
            raise ValidationError(f"{path}: frame {i} is {w}x{h}, expected {width}x{height}")
        if maxval != 255:
            raise ValidationError(f"{path}: only maxval 255 is supported, got {maxval}")
        start = m.end()
        end = start + w * h
        if end > len(data):
            raise CodecIOError(f"{path}: frame {i}: expected {w * h}, got {len(data) - start} bytes")
        frames.append(np.frombuffer(data[start:end], dtype=np.uint8).reshape(h, w).copy())
        pos = end
    return frames


def to_pixels(frame) -> np.ndarray:
    """Round to nearest and clamp to [0, 255]."""
    return np.clip(np.rint(np.asarray(frame, dtype=np.float64)), 0, 255).astype(np.uint8)


def write_frames(frames, path, fmt: str) -> int:
    frames = list(frames)
    if not frames:
        raise ValidationError("no frames to write")
    pixels = [to_pixels(f) for f in frames]
    if fmt == "raw":
        blob = b"".join(p.tobytes() for p in pixels)
    elif fmt == "pgm":
        blob = b"".join(
            b"P5\n%d %d\n255\n" % (p.shape[1], p.shape[0]) + p.tobytes() for p in pixels
        )
    else:
        raise ValidationError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise CodecIOError(f"cannot write {path}: {exc}") from exc
    return len(blob)


def group_pairs(frames) -> list:
    """Group consecutive frames into pairs; a trailing odd frame is doubled."""
    frames = list(frames)
    if not frames:
        raise ValidationError("cannot group an empty frame sequence")
    pairs = [FramePair(frames[i], frames[i + 1]) for i in range(0, len(frames) - 1, 2)]
    if len(frames) % 2:
        pairs.append(FramePair(frames[-1], frames[-1], duplicated=True))
    return pairs
