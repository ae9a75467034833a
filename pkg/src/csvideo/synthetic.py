"""Synthetic luma test sequences.

``blob``: a Gaussian blob drifting slowly over a smooth gradient.
``texture``: low-pass random texture panned along a random walk with a few
pixels of motion per frame.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter, shift

from .errors import ValidationError


def blob_sequence(size: int, frames: int, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    background = 60 + 50 * xx / size + 30 * yy / size
    cx, cy = size * 0.35, size * 0.45
    vx, vy = rng.uniform(0.5, 1.0, 2)
    sigma = size / 8
    out = []
    for t in range(frames):
        px, py = cx + vx * t, cy + vy * t
        blob = 120 * np.exp(-((xx - px) ** 2 + (yy - py) ** 2) / (2 * sigma**2))
        out.append(np.clip(np.rint(background + blob), 0, 255).astype(np.uint8))
    return out


def texture_sequence(size: int, frames: int, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    base = gaussian_filter(rng.normal(size=(2 * size, 2 * size)), 5.0)
    base = 128 + 40 * base / base.std()
    pos = np.array([size / 2, size / 2])
    out = []
    for _ in range(frames):
        window = shift(base, -pos, order=1, mode="wrap")[:size, :size]
        out.append(np.clip(np.rint(window), 0, 255).astype(np.uint8))
        pos += rng.normal(0, 1.5, 2)
    return out


SEQUENCES = {"blob": blob_sequence, "texture": texture_sequence}


def make_sequence(name: str, size: int, frames: int, seed: int = 0) -> list:
    try:
        return SEQUENCES[name](size, frames, seed)
    except KeyError:
        raise ValidationError(f"unknown synthetic sequence {name!r}") from None


# test corpus used by the trend checks: two pairs per sequence
CORPUS_SIZE = 64
CORPUS_FRAMES = 4
CORPUS_SEED = 1


def corpus() -> dict:
    return {name: make_sequence(name, CORPUS_SIZE, CORPUS_FRAMES, CORPUS_SEED) for name in SEQUENCES}
