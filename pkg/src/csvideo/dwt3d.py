"""Functional 3-D DWT: separable 9/7 per frame, Haar across a frame pair.

Band names put the horizontal (row) filter first: ``LH`` is low-pass along
rows and high-pass along columns.  Multilevel decomposition recurses on the
spatial LL band of each frame; the temporal Haar step runs once per pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .lifting import LiftingCoeffs, forward_97, forward_haar, inverse_97, inverse_haar

DETAIL_BANDS = ("LH", "HL", "HH")
BAND_ORDER = ("LL", "LH", "HL", "HH")

# The seven compressively sensed band streams, in bitstream order.
MEASURED_BANDS = (
    ("L", "LH"),
    ("L", "HL"),
    ("L", "HH"),
    ("H", "LL"),
    ("H", "LH"),
    ("H", "HL"),
    ("H", "HH"),
)


@dataclass
class SubbandGrid:
    """Detail bands for every level plus the deepest LL band.

    ``details[0]`` is level 1 (finest).
    """

    details: list
    ll: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.details)

    def band(self, name: str, level: int) -> np.ndarray:
        if name == "LL":
            if level != self.levels:
                raise ValidationError(f"LL is only stored at level {self.levels}")
            return self.ll
        return self.details[level - 1][name]

    def bands(self):
        """Yield ``(name, level, array)`` for every stored band."""
        yield "LL", self.levels, self.ll
        for lev, det in enumerate(self.details, start=1):
            for name in DETAIL_BANDS:
                yield name, lev, det[name]

    def coefficient_count(self) -> int:
        return sum(a.size for _, _, a in self.bands())

    def map(self, fn) -> "SubbandGrid":
        return SubbandGrid(
            details=[{k: fn(v) for k, v in d.items()} for d in self.details],
            ll=fn(self.ll),
        )

    def copy(self) -> "SubbandGrid":
        return self.map(np.array)


@dataclass
class Gof3D:
    l_frame: SubbandGrid
    h_frame: SubbandGrid
    threshold: float = 0.0
    levels: int = field(init=False)

    def __post_init__(self):
        self.levels = self.l_frame.levels

    def frame(self, which: str) -> SubbandGrid:
        if which == "L":
            return self.l_frame
        if which == "H":
            return self.h_frame
        raise ValidationError(f"temporal band must be 'L' or 'H', got {which!r}")

    @property
    def lll(self) -> np.ndarray:
        return self.l_frame.ll

    def coefficient_count(self) -> int:
        return self.l_frame.coefficient_count() + self.h_frame.coefficient_count()

    def energy(self) -> float:
        return float(
            sum(np.sum(a * a) for g in (self.l_frame, self.h_frame) for _, _, a in g.bands())
        )


def _analysis_2d(x, coeffs):
    lo, hi = forward_97(x, coeffs, axis=1)
    ll, lh = forward_97(lo, coeffs, axis=0)
    hl, hh = forward_97(hi, coeffs, axis=0)
    return ll, {"LH": lh, "HL": hl, "HH": hh}


def _synthesis_2d(ll, det, coeffs):
    lo = inverse_97(ll, det["LH"], coeffs, axis=0)
    hi = inverse_97(det["HL"], det["HH"], coeffs, axis=0)
    return inverse_97(lo, hi, coeffs, axis=1)


def check_levels(height: int, width: int, levels: int) -> None:
    if levels < 1:
        raise ValidationError(f"levels must be >= 1, got {levels}")
    step = 2**levels
    if height % step or width % step:
        raise ValidationError(
            f"{width}x{height} frame is not divisible by 2^{levels} = {step}"
        )


def forward_2d(frame, levels: int, coeffs: LiftingCoeffs) -> SubbandGrid:
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"expected a 2-D frame, got shape {x.shape}")
    check_levels(*x.shape, levels)
    details = []
    for _ in range(levels):
        x, det = _analysis_2d(x, coeffs)
        details.append(det)
    return SubbandGrid(details=details, ll=x)


def inverse_2d(grid: SubbandGrid, coeffs: LiftingCoeffs) -> np.ndarray:
    x = grid.ll
    for det in reversed(grid.details):
        if det["HH"].shape != x.shape:
            raise ValidationError(
                f"band shape {det['HH'].shape} does not match LL {x.shape}"
            )
        x = _synthesis_2d(x, det, coeffs)
    return x


def _haar_grids(g0: SubbandGrid, g1: SubbandGrid, fn):
    lo_ll, hi_ll = fn(g0.ll, g1.ll)
    lo_det, hi_det = [], []
    for d0, d1 in zip(g0.details, g1.details):
        lo, hi = {}, {}
        for name in DETAIL_BANDS:
            lo[name], hi[name] = fn(d0[name], d1[name])
        lo_det.append(lo)
        hi_det.append(hi)
    return SubbandGrid(lo_det, lo_ll), SubbandGrid(hi_det, hi_ll)


def forward_3d(pair, levels: int, coeffs: LiftingCoeffs) -> Gof3D:
    f0, f1 = (np.asarray(f, dtype=np.float64) for f in pair)
    if f0.shape != f1.shape:
        raise ValidationError(f"frame shapes differ: {f0.shape} vs {f1.shape}")
    g0 = forward_2d(f0, levels, coeffs)
    g1 = forward_2d(f1, levels, coeffs)
    l_frame, h_frame = _haar_grids(g0, g1, forward_haar)
    return Gof3D(l_frame, h_frame)


def inverse_3d(gof: Gof3D, coeffs: LiftingCoeffs):
    if gof.l_frame.levels != gof.h_frame.levels or gof.l_frame.ll.shape != gof.h_frame.ll.shape:
        raise ValidationError("L-frame and H-frame grids have different structure")
    g0, g1 = _haar_grids(gof.l_frame, gof.h_frame, inverse_haar)
    return inverse_2d(g0, coeffs), inverse_2d(g1, coeffs)


def sparsify(gof: Gof3D, threshold: float) -> Gof3D:
    """Hard-threshold every band except LLL (|v| < threshold becomes 0)."""
    if threshold < 0:
        raise ValidationError(f"threshold must be >= 0, got {threshold}")

    def cut(a):
        a = np.array(a, copy=True)
        a[np.abs(a) < threshold] = 0
        return a

    l_frame = gof.l_frame.map(cut)
    l_frame.ll = np.array(gof.l_frame.ll, copy=True)
    out = Gof3D(l_frame, gof.h_frame.map(cut), threshold=threshold)
    return out


def column_stream(band, P: int, length: int | None = None):
    """Split a band into measurement vectors of ``P`` adjacent columns.

    Columns are concatenated top to bottom, left to right. With ``length``
    given, the column-major flattening is cut into vectors of that size
    instead (the final vector zero padded), which lets smaller deep-level
    bands share one measurement length.
    """
    band = np.asarray(band)
    if band.ndim != 2:
        raise ValidationError(f"band must be 2-D, got shape {band.shape}")
    if P < 1 or band.shape[1] % P:
        raise ValidationError(f"P={P} does not divide band width {band.shape[1]}")
    flat = band.reshape(-1, order="F")
    if length is None:
        length = P * band.shape[0]
    return _chunk(flat, length)


def _chunk(flat, length):
    if length < 1:
        raise ValidationError(f"vector length must be positive, got {length}")
    count = -(-flat.size // length)
    padded = np.zeros(count * length, dtype=flat.dtype)
    padded[: flat.size] = flat
    return [padded[i * length : (i + 1) * length] for i in range(count)]


def band_group(gof: Gof3D, band_id) -> list:
    """All arrays of one measured band type, finest level first."""
    if tuple(band_id) not in MEASURED_BANDS:
        raise ValidationError(f"invalid band id {band_id!r}")
    which, name = band_id
    grid = gof.frame(which)
    if name == "LL":
        return [grid.ll]
    return [d[name] for d in grid.details]


def band_vectors(gof: Gof3D, band_id, length: int) -> list:
    """Measurement vectors for one band stream (all levels, column-major)."""
    flat = np.concatenate([a.reshape(-1, order="F") for a in band_group(gof, band_id)])
    return _chunk(flat, length)


def scatter_band_vectors(gof: Gof3D, band_id, vectors) -> None:
    """Inverse of :func:`band_vectors`; writes values back in place."""
    arrays = band_group(gof, band_id)
    flat = np.concatenate(list(vectors)) if vectors else np.zeros(0)
    pos = 0
    for a in arrays:
        n = a.size
        a[...] = flat[pos : pos + n].reshape(a.shape, order="F")
        pos += n
