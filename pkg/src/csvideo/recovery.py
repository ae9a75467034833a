"""Sparse recovery of measured band vectors.

AMP (soft threshold with Onsager correction) is the decoder's solver; IHT
with a known sparsity level serves as a cross-check and fallback.

Both work with the column-normalised operator ``A = Phi / sqrt(M)`` and the
correspondingly rescaled measurements ``y / sqrt(M)``, so integer
measurements from the encoder can be passed in unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cs import PhiMatrix
from .errors import ValidationError

MAD_SCALE = 0.6744897501960817  # median(|N(0,1)|)


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 1000
    tolerance: float = 1e-6
    threshold_schedule: str = "median"  # or "l2"
    tau: float = 1.3
    debias: bool = True
    solver: str = "amp"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be > 0")
        if self.threshold_schedule not in ("median", "l2"):
            raise ValidationError(f"unknown threshold schedule {self.threshold_schedule!r}")
        if self.solver not in ("amp", "iht"):
            raise ValidationError(f"unknown solver {self.solver!r}")


@dataclass
class Recovery:
    x: np.ndarray
    residual: float  # ||y - Phi x|| / ||y||
    iterations: int
    converged: bool


def _operator(y, phi):
    A = phi.dense() if isinstance(phi, PhiMatrix) else np.asarray(phi, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.shape[0],):
        raise ValidationError(f"measurement length {y.shape} does not match {A.shape[0]} rows")
    scale = np.sqrt(A.shape[0])
    return A / scale, y / scale


def _rel_residual(A, y, x, ynorm):
    return float(np.linalg.norm(y - A @ x) / ynorm)


def soft_threshold(r, theta):
    return np.sign(r) * np.maximum(np.abs(r) - theta, 0.0)


PRUNE = 1e-3  # entries below this fraction of the peak do not count as support


def _debias(A, y, x, prune=True):
    # a support of M/2 or more can fit y exactly without being the sparse solution
    peak = np.max(np.abs(x), initial=0.0)
    support = np.flatnonzero(np.abs(x) > PRUNE * peak if prune else x)
    if not 0 < support.size < A.shape[0] / 2:
        return x
    sol, *_ = np.linalg.lstsq(A[:, support], y, rcond=None)
    out = np.zeros_like(x)
    out[support] = sol
    return out


def amp_recover(y, phi, cfg: SolverConfig = SolverConfig()) -> Recovery:
    """Approximate message passing with a soft-threshold denoiser.

    Iterates ``x <- eta(x + A^T z; tau * sigma)`` with residual
    ``z <- y - A x + z * ||x||_0 / M``. ``sigma`` is estimated from the
    residual, by its median absolute value (``"median"``) or its RMS
    (``"l2"``). With ``cfg.debias`` the final support (entries above
    ``PRUNE`` times the peak) is refit by least squares when it is smaller
    than M/2 and the refit lowers the residual.
    """
    A, yn = _operator(y, phi)
    M, N = A.shape
    ynorm = np.linalg.norm(yn)
    x = np.zeros(N)
    if ynorm == 0:
        return Recovery(x, 0.0, 1, True)
    z = yn.copy()
    best, best_res = x, 1.0
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        r = x + A.T @ z
        if cfg.threshold_schedule == "median":
            sigma = np.median(np.abs(z)) / MAD_SCALE
        else:
            sigma = np.linalg.norm(z) / np.sqrt(M)
        x_new = soft_threshold(r, cfg.tau * sigma)
        z = yn - A @ x_new + z * (np.count_nonzero(x_new) / M)
        x = x_new
        res = _rel_residual(A, yn, x, ynorm)
        if res < best_res:
            best, best_res = x, res
        if res <= cfg.tolerance:
            break
    if cfg.debias and best_res > 0:
        refit = _debias(A, yn, best)
        refit_res = _rel_residual(A, yn, refit, ynorm)
        if refit_res < best_res:
            best, best_res = refit, refit_res
    return Recovery(best, best_res, it, best_res <= cfg.tolerance)


def hard_threshold(v, K: int):
    out = np.zeros_like(v)
    if K > 0:
        keep = np.argpartition(-np.abs(v), K - 1)[:K]
        out[keep] = v[keep]
    return out


def iht_recover(y, phi, K: int, cfg: SolverConfig = SolverConfig(solver="iht")) -> Recovery:
    """Normalised iterative hard thresholding keeping the ``K`` largest entries.

    The step size is ``mu = ||g_S||^2 / ||A g_S||^2`` with ``g`` the gradient
    restricted to the current support, halved until the objective does not
    increase when the support changes.
    """
    A, yn = _operator(y, phi)
    M, N = A.shape
    if not 0 <= K <= M:
        raise ValidationError(f"sparsity K={K} must be in [0, {M}]")
    x = np.zeros(N)
    ynorm = np.linalg.norm(yn)
    if K == 0 or ynorm == 0:
        return Recovery(x, 0.0 if ynorm == 0 else 1.0, 0, ynorm == 0)
    support = np.argpartition(-np.abs(A.T @ yn), K - 1)[:K]
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        resid = yn - A @ x
        g = A.T @ resid
        gs = np.zeros(N)
        gs[support] = g[support]
        denom = np.linalg.norm(A @ gs) ** 2
        mu = (gs @ gs) / denom if denom > 0 else 1.0
        x_new = hard_threshold(x + mu * g, K)
        new_support = np.flatnonzero(x_new)
        if set(new_support) != set(support):
            old = np.linalg.norm(resid) ** 2
            for _ in range(30):
                if np.linalg.norm(yn - A @ x_new) ** 2 <= old:
                    break
                mu /= 2
                x_new = hard_threshold(x + mu * g, K)
            new_support = np.flatnonzero(x_new)
        x, support = x_new, new_support
        if _rel_residual(A, yn, x, ynorm) <= cfg.tolerance:
            break
    if cfg.debias:
        x = _debias(A, yn, x, prune=False)
    res = _rel_residual(A, yn, x, ynorm)
    return Recovery(x, res, it, res <= cfg.tolerance)


def min_norm(y, phi) -> np.ndarray:
    """Least-norm solution of ``Phi x = y`` (projection onto the row space)."""
    A, yn = _operator(y, phi)
    return np.linalg.pinv(A) @ yn


def recover(y, phi, cfg: SolverConfig, K: int | None = None) -> Recovery:
    if cfg.solver == "iht":
        if K is None:
            K = np.asarray(y).shape[0] // 2
        return iht_recover(y, phi, K, cfg)
    return amp_recover(y, phi, cfg)
