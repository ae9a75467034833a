"""1-D lifting transforms: flipped CDF 9/7 and Haar.

The 9/7 cascade is written in the flipped form, where every lifting step
multiplies only the sample being updated and adds the (unscaled) sum of its
two neighbours::

    H1 = a' * x_odd + (x_even_left + x_even_right)
    L1 = b' * x_even + (H1_left + H1_right)
    H2 = c' * H1 + (L1_left + L1_right)
    L2 = d' * L1 + (H2_left + H2_right)
    H  = k0 * H2
    L  = k1 * L2

Boundaries use whole-sample symmetric extension, which for an even-length
signal reduces to mirroring the first odd-phase value on the left and the
last even-phase value on the right at every step.

The per-step helper ``predict`` is shared with the datapath
simulator so both paths perform the same floating point operations in the
same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Lifting constants as commonly printed (10 significant digits).
PRINTED = {
    "alpha": -1.586134342,
    "beta": -0.052980118,
    "gamma": 0.8829110762,
    "delta": 0.4435068522,
    "zeta": 1.149604398,
}

# Full-precision values of the same constants. The printed digits agree with
# these to ~1e-9, which is not enough to match the CDF 9/7 filter bank at 1e-9.
ALPHA = -1.586134342059924
BETA = -0.052980118572961
GAMMA = 0.882911075530934
DELTA = 0.443506852043971
ZETA = 1.149604398860241

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LiftingCoeffs:
    a_prime: float
    b_prime: float
    c_prime: float
    d_prime: float
    k0: float
    k1: float
    mode: str

    @classmethod
    def float_exact(cls) -> "LiftingCoeffs":
        return cls(
            a_prime=1.0 / ALPHA,
            b_prime=1.0 / (ALPHA * BETA),
            c_prime=1.0 / (BETA * GAMMA),
            d_prime=1.0 / (GAMMA * DELTA),
            k0=ALPHA * BETA * GAMMA / ZETA,
            k1=ALPHA * BETA * GAMMA * DELTA * ZETA,
            mode="float",
        )

    @classmethod
    def fixed_adopted(cls) -> "LiftingCoeffs":
        """Shift-add multiplier values used by the hardware processing elements.

        Only the four lifting multipliers are approximated; the output scale
        factors keep their exact values.
        """
        exact = cls.float_exact()
        return cls(
            a_prime=-0.6328,
            b_prime=12.0,
            c_prime=-21.375,
            d_prime=2.565,
            k0=exact.k0,
            k1=exact.k1,
            mode="fixed",
        )

    @classmethod
    def for_mode(cls, mode: str) -> "LiftingCoeffs":
        if mode == "float":
            return cls.float_exact()
        if mode == "fixed":
            return cls.fixed_adopted()
        raise ValidationError(f"unknown coefficient mode {mode!r}")


def predict(scale, centre, left, right):
    """One flipped lifting step: ``scale * centre + (left + right)``."""
    return scale * centre + (left + right)


def unpredict(scale, value, left, right):
    return (value - (left + right)) / scale


def _shift_left(v):
    # v[m-1] with v[-1] mirrored to v[0]
    return np.concatenate([v[..., :1], v[..., :-1]], axis=-1)


def _shift_right(v):
    # v[m+1] with v[n] mirrored to v[n-1]
    return np.concatenate([v[..., 1:], v[..., -1:]], axis=-1)


def _check_even(n):
    if n < 2 or n % 2:
        raise ValidationError(f"9/7 lifting needs an even length >= 2, got {n}")


def forward_97(x, coeffs: LiftingCoeffs, axis: int = -1):
    """Forward 9/7 DWT along ``axis``. Returns ``(L, H)``, each half length."""
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, -1)
    _check_even(x.shape[-1])
    xe = x[..., 0::2]
    xo = x[..., 1::2]
    h1 = predict(coeffs.a_prime, xo, xe, _shift_right(xe))
    l1 = predict(coeffs.b_prime, xe, _shift_left(h1), h1)
    h2 = predict(coeffs.c_prime, h1, l1, _shift_right(l1))
    l2 = predict(coeffs.d_prime, l1, _shift_left(h2), h2)
    low = coeffs.k1 * l2
    high = coeffs.k0 * h2
    return np.moveaxis(low, -1, axis), np.moveaxis(high, -1, axis)


def inverse_97(low, high, coeffs: LiftingCoeffs, axis: int = -1):
    low = np.moveaxis(np.asarray(low, dtype=np.float64), axis, -1)
    high = np.moveaxis(np.asarray(high, dtype=np.float64), axis, -1)
    if low.shape != high.shape:
        raise ValidationError(
            f"low/high band length mismatch: {low.shape} vs {high.shape}"
        )
    l2 = low / coeffs.k1
    h2 = high / coeffs.k0
    l1 = unpredict(coeffs.d_prime, l2, _shift_left(h2), h2)
    h1 = unpredict(coeffs.c_prime, h2, l1, _shift_right(l1))
    xe = unpredict(coeffs.b_prime, l1, _shift_left(h1), h1)
    xo = unpredict(coeffs.a_prime, h1, xe, _shift_right(xe))
    out = np.empty(xe.shape[:-1] + (2 * xe.shape[-1],))
    out[..., 0::2] = xe
    out[..., 1::2] = xo
    return np.moveaxis(out, -1, axis)


def forward_haar(x0, x1):
    """Temporal Haar pair: ``L = (x0 + x1)/sqrt2``, ``H = (x1 - x0)/sqrt2``."""
    return (x0 + x1) / SQRT2, (x1 - x0) / SQRT2


def inverse_haar(low, high):
    return (low - high) / SQRT2, (low + high) / SQRT2


def symmetric_extend(x, left: int, right: int):
    """Whole-sample symmetric extension (the edge sample is not repeated)."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n == 0:
        raise ValidationError("cannot extend an empty signal")
    if left < 0 or right < 0 or max(left, right) > n - 1:
        raise ValidationError(
            f"extension ({left}, {right}) too long for signal of length {n}"
        )
    head = x[..., 1 : left + 1][..., ::-1]
    tail = x[..., n - 1 - right : n - 1][..., ::-1]
    return np.concatenate([head, x, tail], axis=-1)
