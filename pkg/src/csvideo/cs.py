"""Bernoulli measurement matrices and streaming measurement accumulation.

The matrix is stored column-wise as bits (0 -> +1, 1 -> -1), one M-bit word
per column, which is how the encoder reads it: each incoming coefficient
x_k selects column k and every accumulator adds either x_k or -x_k.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

INT16_MIN = -(1 << 15)
INT16_MAX = (1 << 15) - 1
# 15-bit signed DWT output fed to the accumulators
DATA_IN_MIN = -(1 << 14)
DATA_IN_MAX = (1 << 14) - 1


class SparsityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PhiMatrix:
    """M x N Bernoulli +/-1 matrix drawn from a Philox counter-based stream."""

    seed: int
    bits: np.ndarray  # (M, N) uint8

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    def column_word(self, k: int) -> int:
        """Column k packed into one integer, bit i = row i."""
        col = self.bits[:, k]
        return int(sum(int(b) << i for i, b in enumerate(col)))

    def words(self) -> list:
        return [self.column_word(k) for k in range(self.cols)]

    def dense(self) -> np.ndarray:
        return 1.0 - 2.0 * self.bits


def gen_phi(seed: int, M: int, N: int) -> PhiMatrix:
    if not 0 < M <= N:
        raise ValidationError(f"need 0 < M <= N, got M={M}, N={N}")
    gen = np.random.Generator(np.random.Philox(seed & (2**64 - 1)))
    bits = gen.integers(0, 2, size=(M, N), dtype=np.uint8)
    bits.setflags(write=False)
    return PhiMatrix(seed=seed, bits=bits)


def choose_m(N: int, K: int | None = None) -> int:
    """Measurement count (always N/4); warns if K log2(N/K) exceeds it."""
    if N < 8:
        raise ValidationError(f"vector length must be >= 8, got {N}")
    M = N // 4
    if K and K < N and M < K * math.log2(N / K):
        warnings.warn(
            f"M={M} below K*log2(N/K)={K * math.log2(N / K):.1f} for K={K}, N={N}",
            SparsityWarning,
            stacklevel=2,
        )
    return M


def estimate_sparsity(x) -> int:
    return int(np.count_nonzero(x))


@dataclass
class MeasurementVector:
    values: np.ndarray
    saturated: np.ndarray = field(default=None)
    band_id: tuple | None = None
    block: int = 0

    def __post_init__(self):
        if self.saturated is None:
            self.saturated = np.zeros(len(self.values), dtype=bool)

    @property
    def saturation_count(self) -> int:
        return int(self.saturated.sum())


class Accumulator:
    """M add/subtract accumulators with a working and an output register.

    ``push`` folds one coefficient into the working register. After
    ``phi.cols`` pushes the working register is copied to the output register
    and cleared, ready for the next vector.
    """

    def __init__(self, phi: PhiMatrix, fixed: bool = False):
        self.phi = phi
        self.fixed = fixed
        dtype = np.int64 if fixed else np.float64
        self.working = np.zeros(phi.rows, dtype=dtype)
        self.output = np.zeros(phi.rows, dtype=dtype)
        self.saturated = np.zeros(phi.rows, dtype=bool)
        self.out_saturated = np.zeros(phi.rows, dtype=bool)
        self.k = 0

    def push(self, xk) -> bool:
        negate = self.phi.bits[:, self.k].astype(bool)
        term = np.where(negate, -xk, xk)
        self.working += term
        if self.fixed:
            over = (self.working > INT16_MAX) | (self.working < INT16_MIN)
            if over.any():
                self.saturated |= over
                np.clip(self.working, INT16_MIN, INT16_MAX, out=self.working)
        self.k += 1
        if self.k == self.phi.cols:
            self.output[:] = self.working
            self.out_saturated[:] = self.saturated
            self.working[:] = 0
            self.saturated[:] = False
            self.k = 0
            return True
        return False


def measure(x, phi: PhiMatrix, fixed: bool = False, band_id=None, block: int = 0) -> MeasurementVector:
    """y = Phi x by streaming one coefficient per step into the accumulators."""
    x = np.asarray(x)
    if x.shape != (phi.cols,):
        raise ValidationError(f"vector length {x.shape} does not match Phi with {phi.cols} columns")
    if fixed:
        if not np.issubdtype(x.dtype, np.integer):
            if np.any(x != np.rint(x)):
                raise ValidationError("fixed-mode measurement needs integer input")
            x = x.astype(np.int64)
        x = np.clip(x, DATA_IN_MIN, DATA_IN_MAX).astype(np.int64)
    else:
        x = x.astype(np.float64)
    acc = Accumulator(phi, fixed=fixed)
    for xk in x:
        acc.push(xk)
    return MeasurementVector(
        values=acc.output.copy(),
        saturated=acc.out_saturated.copy(),
        band_id=band_id,
        block=block,
    )


def measure_fast(x, phi: PhiMatrix, band_id=None, block: int = 0) -> MeasurementVector:
    """Integer-mode :func:`measure` evaluated with array partial sums.

    Produces the same values and saturation flags as the streaming path: the
    running sums are formed in one pass and the step-by-step accumulator is
    only replayed when some partial sum leaves the 16-bit range.
    """
    x = np.clip(np.asarray(x, dtype=np.int64), DATA_IN_MIN, DATA_IN_MAX)
    if x.shape != (phi.cols,):
        raise ValidationError(f"vector length {x.shape} does not match Phi with {phi.cols} columns")
    signs = 1 - 2 * phi.bits.astype(np.int64)
    partial = np.cumsum(signs * x, axis=1)
    if partial.max(initial=0) > INT16_MAX or partial.min(initial=0) < INT16_MIN:
        return measure(x, phi, fixed=True, band_id=band_id, block=block)
    return MeasurementVector(values=partial[:, -1].copy(), band_id=band_id, block=block)
