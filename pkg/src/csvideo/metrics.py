"""Quality metrics."""

import math

import numpy as np

from .errors import ValidationError


def psnr(a, b, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10 * math.log10(peak**2 / mse)


def sequence_psnr(original, decoded) -> float:
    """PSNR over a whole sequence (pooled MSE), decoded frames as pixels."""
    from .video_io import to_pixels

    a = np.stack([np.asarray(f) for f in original])
    b = np.stack([to_pixels(f) for f in decoded])
    return psnr(a, b)
