"""Encoder and decoder pipelines.

Encoder, per frame pair: 3-D DWT, rounding of every coefficient to the
15-bit integer word the measurement stage consumes, hard thresholding of all
bands but LLL, then one measurement vector ``y = Phi x`` per non-zero block of
each of the seven remaining band streams. All-zero blocks are flagged and
skipped. LLL travels as integers.

Decoder: regenerate Phi from the header seed, recover every flagged block,
rebuild the coefficient grids and run the inverse 3-D DWT. A block whose
recovery does not converge to a solution sparser than M/2 is replaced by the
least-norm solution of ``Phi x = y``, which never has larger error than
dropping the block.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bitstream as bs
from .cs import DATA_IN_MAX, DATA_IN_MIN, choose_m, estimate_sparsity, gen_phi, measure_fast
from .dwt3d import (
    MEASURED_BANDS, Gof3D, band_vectors, check_levels, forward_3d, inverse_3d,
    scatter_band_vectors, sparsify,
)
from .errors import ValidationError
from .lifting import LiftingCoeffs
from .recovery import SolverConfig, min_norm, recover
from .video_io import group_pairs, validate_dims

log = logging.getLogger(__name__)

DEFAULT_SEED = 0x5EED_C0DE
DEFAULT_THRESHOLD = 1.0
DEFAULT_PAR = 2


@dataclass
class EncodeConfig:
    width: int
    height: int
    levels: int = 1
    threshold: float = DEFAULT_THRESHOLD
    par: int = DEFAULT_PAR
    mode: str = "fixed"
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 1 <= self.levels <= 3:
            raise ValidationError(f"levels must be in [1, 3], got {self.levels}")
        if self.par not in (2, 4, 8, 16, 32):
            raise ValidationError(f"P must be one of 2, 4, 8, 16, 32, got {self.par}")
        if self.threshold < 0:
            raise ValidationError(f"threshold must be >= 0, got {self.threshold}")
        if self.mode not in ("float", "fixed"):
            raise ValidationError(f"mode must be 'float' or 'fixed', got {self.mode!r}")
        validate_dims(self.width, self.height, self.par)
        check_levels(self.height, self.width, self.levels)
        if (self.width // 2) % self.par:
            raise ValidationError(f"P={self.par} does not divide band width {self.width // 2}")

    @property
    def vector_length(self) -> int:
        return self.par * self.height // 2


@dataclass
class EncodeSummary:
    bytes: int
    header_bytes: int
    cr: float
    cr_payload: float
    measurement_pct: float
    saturation_count: int
    band_k: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def lines(self) -> list:
        out = [
            f"bytes={self.bytes}",
            f"cr={self.cr:.4f}",
            f"cr_payload={self.cr_payload:.4f}",
            f"measurement_pct={self.measurement_pct:.4f}",
            f"saturation_count={self.saturation_count}",
        ]
        for band, (mean_k, max_k) in self.band_k.items():
            out.append(f"k_{band}=mean:{mean_k:.2f},max:{max_k}")
        out += [f"cfg_{k}={v}" for k, v in self.config.items()]
        return out


def quantize(gof: Gof3D) -> Gof3D:
    """Round every coefficient to the 15-bit integer measurement input."""
    def q(a):
        return np.clip(np.rint(a), DATA_IN_MIN, DATA_IN_MAX).astype(np.int64)

    return Gof3D(gof.l_frame.map(q), gof.h_frame.map(q), gof.threshold)


def encode_pair(pair, cfg: EncodeConfig, coeffs, phi, stats):
    gof = sparsify(quantize(forward_3d(pair, cfg.levels, coeffs)), cfg.threshold)
    bands = []
    for band_id in MEASURED_BANDS:
        vectors = band_vectors(gof, band_id, cfg.vector_length)
        ks = [estimate_sparsity(v) for v in vectors]
        stats["band_k"].setdefault("".join(band_id), []).extend(ks)
        present = np.array([k > 0 for k in ks], dtype=bool)
        rows = []
        for block, v in enumerate(vectors):
            if present[block]:
                y = measure_fast(v, phi, band_id=band_id, block=block)
                stats["saturation"] += y.saturation_count
                rows.append(y.values)
        meas = np.array(rows, dtype=np.int64).reshape(len(rows), phi.rows)
        bands.append(bs.BandPayload(present, meas))
        stats["measured"] += int(present.sum())
    return bs.GofPayload(gof.lll.astype(np.int64), bands)


def encode(frames, cfg: EncodeConfig):
    """Encode a frame sequence. Returns ``(container_bytes, EncodeSummary)``."""
    frames = [np.asarray(f) for f in frames]
    for f in frames:
        if f.shape != (cfg.height, cfg.width):
            raise ValidationError(f"frame shape {f.shape} does not match {cfg.height}x{cfg.width}")
    pairs = group_pairs(frames)
    coeffs = LiftingCoeffs.for_mode(cfg.mode)
    N = cfg.vector_length
    M = choose_m(N)
    phi = gen_phi(cfg.seed, M, N)
    header = bs.Header(
        width=cfg.width, height=cfg.height, frame_count=len(frames), gof_count=len(pairs),
        levels=cfg.levels, threshold=cfg.threshold, phi_seed=cfg.seed, M=M, N=N,
        coeff_mode=cfg.mode, duplicated=pairs[-1].duplicated,
    )
    # the header stores the threshold in Q16.16; encode with the stored value
    if np.isfinite(cfg.threshold):
        cfg.threshold = header.threshold = header.threshold_word() / 65536
    stats = {"band_k": {}, "saturation": 0, "measured": 0}
    gofs = [encode_pair(p, cfg, coeffs, phi, stats) for p in pairs]
    data = bs.pack(bs.Container(header, gofs))
    original_bits = 8 * cfg.width * cfg.height * len(frames)
    lll = header.lll_shape()[0] * header.lll_shape()[1]
    pct = np.mean([
        bs.measurement_percentage(cfg.width, cfg.height, M, cfg.levels, cfg.par,
                                  measured_vectors=sum(int(b.present.sum()) for b in g.bands))
        for g in gofs
    ])
    summary = EncodeSummary(
        bytes=len(data),
        header_bytes=bs.HEADER_SIZE,
        cr=bs.compression_ratio(original_bits, 8 * len(data)),
        cr_payload=bs.compression_ratio(original_bits, 8 * max(1, len(data) - bs.HEADER_SIZE)),
        measurement_pct=float(pct),
        saturation_count=stats["saturation"],
        band_k={b: (float(np.mean(k)), int(np.max(k))) for b, k in stats["band_k"].items()},
        config=asdict(cfg),
    )
    log.debug("encoded %d pairs, LLL %d coeffs each, %d measured blocks", len(pairs), lll, stats["measured"])
    return data, summary


@dataclass
class DecodeSummary:
    frames: int
    blocks: int = 0
    converged: int = 0
    mean_iterations: float = 0.0

    def lines(self) -> list:
        return [
            f"frames={self.frames}",
            f"blocks={self.blocks}",
            f"converged={self.converged}",
            f"mean_iterations={self.mean_iterations:.2f}",
        ]


def _empty_gof(header: bs.Header) -> Gof3D:
    zero = np.zeros((header.height, header.width))
    return forward_3d((zero, zero), header.levels, LiftingCoeffs.float_exact())


def decode_container(container: bs.Container, solver: SolverConfig = SolverConfig()):
    """Decode to a list of float frames and a :class:`DecodeSummary`."""
    h = container.header
    coeffs = LiftingCoeffs.for_mode(h.coeff_mode)
    phi = gen_phi(h.phi_seed, h.M, h.N) if container.gofs else None
    frames = []
    iterations = []
    converged = 0
    for payload in container.gofs:
        gof = _empty_gof(h)
        gof.l_frame.ll[...] = payload.lll
        for band_id, band in zip(MEASURED_BANDS, payload.bands):
            vectors = [np.zeros(h.N) for _ in range(len(band.present))]
            rows = iter(band.measurements)
            for i, present in enumerate(band.present):
                if present:
                    y = next(rows)
                    res = recover(y, phi, solver)
                    iterations.append(res.iterations)
                    if res.converged and np.count_nonzero(res.x) < h.M / 2:
                        vectors[i] = res.x
                        converged += 1
                    else:
                        # no trustworthy sparse solution: least-norm estimate
                        vectors[i] = min_norm(y, phi)
            scatter_band_vectors(gof, band_id, vectors)
        frames.extend(inverse_3d(gof, coeffs))
    frames = frames[: h.frame_count]
    summary = DecodeSummary(
        frames=len(frames),
        blocks=len(iterations),
        converged=converged,
        mean_iterations=float(np.mean(iterations)) if iterations else 0.0,
    )
    return frames, summary


def decode(data: bytes, solver: SolverConfig = SolverConfig()):
    return decode_container(bs.unpack(data), solver)
