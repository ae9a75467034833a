"""Cycle-level model of the strip-scanned 3-D DWT encoder datapath.

Two spatial processors (SPs) run in lockstep, one per frame of the pair.
Each SP has a row processor (RP) and a column processor (CP), each built from
P processing units (PUs) with five pipeline stages. The RP reads one row of a
2P+1 pixel wide strip per cycle, walks down the strip, then moves right by 2P
columns. Lifting partials that cross a strip boundary are kept in three row
memories of N words. The CP lifts the RP output down the columns, emitting
low/high results of the L columns and of the H columns on alternate cycles.
A two stage temporal processor (TP) combines the two SP streams with the Haar
step.

Timing model
------------
* cycle ``s*(N+1) + r`` issues row ``r`` of strip ``s``; row ``N`` of each
  strip is a bubble that lets the CP apply the bottom mirror and flush;
* the RP lags its strip by one coefficient pair, so the right-most pair of
  every row is finished by the mirror logic in the last strip and parked in
  the row memories, then lifted by the CP during one extra drain strip;
* a coefficient leaves the CP 10 cycles after the row that completes it was
  issued, and the TP 2 cycles later.

The model executes the same ``predict`` steps in the same order as
:mod:`csvideo.lifting`, so its output is bit-identical to
:func:`csvideo.dwt3d.forward_3d` at one level.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field, fields

import numpy as np

from .dwt3d import Gof3D, SubbandGrid
from .errors import ValidationError
from .lifting import LiftingCoeffs, forward_haar, predict

SUPPORTED_P = (2, 4, 8, 16, 32)
RP_STAGES = 5
CP_STAGES = 5
TP_STAGES = 2
LATENCY_2D = RP_STAGES + CP_STAGES
LATENCY_3D = LATENCY_2D + TP_STAGES
# both adders of a lifting step sit in one stage
CRITICAL_PATH_ADDERS = 2


@dataclass(frozen=True)
class StorageLedger:
    """On-chip words per spatial processor, and the encoder total.

    Register budget per SP (sums to 40P):

    ========================  =====  =========================================
    transpose registers       4P     odd row waiting for its even row + the
                                     incoming row (2P words each)
    RP pipeline latches       10P    5 stages x P PUs x (L, H)
    CP pipeline latches       10P    5 stages x P PUs x 2 results
    CP shift registers        10P    column history x[r-2], H1, L1, H2 (8P)
                                     and interleave hold for H columns (2P)
    rearrange registers       P      H half of the incoming row
    TP pipeline registers     5P     2 stages x 2P words, P spare
    ========================  =====  =========================================
    """

    N: int
    P: int
    row_memory_words: int
    transpose_register_words: int
    rp_latch_words: int
    cp_latch_words: int
    cp_shift_register_words: int
    rearrange_words: int
    tp_pipeline_words: int
    spatial_processors: int = 2

    def items(self) -> dict:
        skip = {"N", "P", "spatial_processors"}
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in skip}

    @property
    def register_words(self) -> int:
        return sum(v for k, v in self.items().items() if k != "row_memory_words")

    @property
    def per_processor_words(self) -> int:
        return self.row_memory_words + self.register_words

    @property
    def total_words(self) -> int:
        return self.spatial_processors * self.per_processor_words


def _check_p(P):
    if P not in SUPPORTED_P:
        raise ValidationError(f"P must be one of {SUPPORTED_P}, got {P}")


def storage_ledger(N: int, P: int) -> StorageLedger:
    _check_p(P)
    if N < 2 or N % 2:
        raise ValidationError(f"N must be a positive even number, got {N}")
    return StorageLedger(
        N=N,
        P=P,
        row_memory_words=3 * N,
        transpose_register_words=4 * P,
        rp_latch_words=RP_STAGES * 2 * P,
        cp_latch_words=CP_STAGES * 2 * P,
        cp_shift_register_words=10 * P,
        rearrange_words=P,
        tp_pipeline_words=5 * P,
    )


@dataclass
class PuState:
    """Pipeline latches of one PU: ``latches[stage]`` holds two words."""

    latches: np.ndarray  # (5, 2) view into the processor latch buffer

    @property
    def stages(self) -> int:
        return self.latches.shape[0]


@dataclass
class SimReport:
    total_cycles: int
    latency_2d: int
    latency_3d: int
    outputs_per_cycle_steady: float
    ledger: StorageLedger
    output: Gof3D
    strips: int
    slack: int
    slack_breakdown: dict = field(default_factory=dict)
    allocated_words: int = 0
    peak_usage: dict = field(default_factory=dict)
    occupancy: list | None = None

    def lines(self) -> list:
        out = [
            f"total_cycles={self.total_cycles}",
            f"latency_2d={self.latency_2d}",
            f"latency_3d={self.latency_3d}",
            f"outputs_per_cycle_steady={self.outputs_per_cycle_steady:g}",
            f"strips={self.strips}",
            f"slack={self.slack}",
        ]
        out += [f"slack_{k}={v}" for k, v in self.slack_breakdown.items()]
        out += [f"ledger_{k}={v}" for k, v in self.ledger.items().items()]
        out += [f"ledger_total_words={self.ledger.total_words}", f"allocated_words={self.allocated_words}"]
        out += [f"peak_{k}={v}" for k, v in self.peak_usage.items()]
        return out

    def write_occupancy(self, path) -> None:
        if not self.occupancy:
            raise ValidationError("simulation was run without occupancy tracing")
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.occupancy[0]))
            writer.writeheader()
            writer.writerows(self.occupancy)


@dataclass
class _Group:
    """One CP output group: results of the L or the H columns for one row."""

    kind: str  # "L" -> (LL, LH), "H" -> (HL, HH)
    row: int
    pairs: np.ndarray
    values: np.ndarray  # (2 SPs, 2n): low results then high results
    issued: int

    @property
    def words(self) -> int:
        return self.values.shape[1]


class _Datapath:
    """Both SPs, the TP and their storage, advanced one clock at a time."""

    def __init__(self, frames: np.ndarray, P: int, coeffs: LiftingCoeffs, trace: bool):
        self.x = frames  # (2, H, W) float64
        _, self.H, self.W = frames.shape
        self.P = P
        self.c = coeffs
        self.strips = self.W // (2 * P)
        self.ledger = storage_ledger(self.H, P)
        # storage, one slice per SP
        self.mem_alpha = np.zeros((2, self.H))
        self.mem_beta = np.zeros((2, self.H))
        self.mem_gama = np.zeros((2, self.H))
        self.rp_latch = np.zeros((2, RP_STAGES, P, 2))
        self.transpose = np.zeros((2, 4 * P))
        self.cp_shift = np.zeros((2, 10 * P))
        self.cp_latch = np.zeros((2, CP_STAGES, 2 * P))
        self.rearrange = np.zeros((2, P))
        self.tp = np.zeros((2, 5 * P))
        self._buffers = [
            self.mem_alpha, self.mem_beta, self.mem_gama, self.rp_latch, self.transpose,
            self.cp_shift, self.cp_latch, self.rearrange, self.tp,
        ]
        self.rp_pus = [PuState(self.rp_latch[0, :, i, :]) for i in range(P)]
        # control tags travelling with the latch contents (not data words)
        self.rp_tags = [None] * RP_STAGES
        self.cp_tags = [None] * CP_STAGES
        self.tp_tags = [None] * TP_STAGES
        self.pending = deque()
        self.cp_live = 0  # history vectors currently live
        self.cp_n = 0
        self.odd_held = False
        self.trace = trace
        self.occupancy = [] if trace else None
        self.peak = {k: 0 for k in self.ledger.items()}
        half = (self.H // 2, self.W // 2)
        self.out = {(t, b): np.full(half, np.nan) for t in "LH" for b in ("LL", "LH", "HL", "HH")}
        self.emits_2d = []  # (cycle, kind, row, issued)
        self.emits_3d = []
        self.words_3d = {}
        self.reads = []  # (cycle, row, first column, last column) for step()
        self.cycle = 0

    def allocated_words(self) -> int:
        return sum(b.size for b in self._buffers)

    # schedule ---------------------------------------------------------------

    def issue_slot(self, t):
        """(strip, row) issued at cycle t, or None once the drain is done."""
        per = self.H + 1
        s, r = divmod(t, per)
        if s > self.strips:
            return None
        return s, r

    def lanes(self, s):
        """Coefficient-pair index of each RP lane and the mask of valid lanes."""
        if s == self.strips:  # drain strip: lane 0 carries the edge pair
            pairs = np.array([self.W // 2 - 1] + [-1] * (self.P - 1))
        else:
            pairs = self.P * s - 1 + np.arange(self.P)
        return pairs, pairs >= 0

    # row processor ----------------------------------------------------------

    def rp_row(self, s, r):
        """Lift row r of strip s. Returns (L, H) per lane, shape (2, P) each."""
        P, c = self.P, self.c
        b = 2 * P * s
        w = self.x[:, r, b : b + 2 * P + 1]
        last = b + 2 * P == self.W
        if last:  # mirror X(r, W) = X(r, W-2)
            w = np.concatenate([w, w[:, -2:-1]], axis=1)
        self.reads.append((self.cycle, r, b, b + 2 * P))
        e = w[:, 0::2]
        o = w[:, 1::2]
        h1 = predict(c.a_prime, o, e[:, :-1], e[:, 1:])
        if s == 0:
            h1_left = h1[:, :1]
        else:
            h1_left = self.mem_alpha[:, r : r + 1]
        h1_prev = np.concatenate([h1_left, h1[:, :-1]], axis=1)
        l1 = predict(c.b_prime, e[:, :-1], h1_prev, h1)
        l1_prev = np.concatenate([self.mem_beta[:, r : r + 1], l1[:, :-1]], axis=1)
        h2 = predict(c.c_prime, h1_prev, l1_prev, l1)
        h2_prev = np.concatenate([self.mem_gama[:, r : r + 1], h2[:, :-1]], axis=1)
        if s == 0:
            h2_prev[:, 1] = h2[:, 1]  # H2(-1) mirrors to H2(1)
        l2 = predict(c.d_prime, l1_prev, h2_prev, h2)
        if last:
            h2_edge = predict(c.c_prime, h1[:, -1], l1[:, -1], l1[:, -1])
            l2_edge = predict(c.d_prime, l1[:, -1], h2[:, -1], h2_edge)
            # the boundary words are dead: park the edge pair for the drain strip
            self.mem_alpha[:, r] = c.k1 * l2_edge
            self.mem_beta[:, r] = c.k0 * h2_edge
        else:
            self.mem_alpha[:, r] = h1[:, -1]
            self.mem_beta[:, r] = l1[:, -1]
            self.mem_gama[:, r] = h2[:, -1]
        return c.k1 * l2, c.k0 * h2

    def rp_drain_row(self, r):
        L = np.zeros((2, self.P))
        H = np.zeros((2, self.P))
        L[:, 0] = self.mem_alpha[:, r]
        H[:, 0] = self.mem_beta[:, r]
        return L, H

    # column processor -------------------------------------------------------

    def _hist(self, k, n):
        return self.cp_shift[:, 2 * self.P * k : 2 * self.P * k + 2 * n]

    def cp_accept(self, tag):
        s, r, slot = tag
        P, c = self.P, self.c
        pairs, valid = self.lanes(s)
        n = int(valid.sum())
        if r == 0:
            self.cp_n = n
            self.cp_pairs = pairs[valid]
        e_prev, h1_hist, l1_hist, h2_hist = (self._hist(k, n) for k in range(4))
        if r < self.H:
            lh = self.rp_latch[:, slot][:, valid, :]  # (2, n, 2)
            self.rearrange[:, :n] = lh[:, :, 1]
            row = np.concatenate([lh[:, :, 0], self.rearrange[:, :n]], axis=1)
            self.transpose[:, 2 * P : 2 * P + 2 * n] = row
            incoming = self.transpose[:, 2 * P : 2 * P + 2 * n]
        else:  # bottom mirror: X(N) = X(N-2)
            incoming = e_prev
        if r == 0:
            e_prev[...] = incoming
            self.cp_live = 1
            return
        if r % 2:
            self.transpose[:, : 2 * n] = incoming
            self.odd_held = True
            return
        odd = self.transpose[:, : 2 * n]
        h1n = predict(c.a_prime, odd, e_prev, incoming)
        h1p = h1n if r == 2 else h1_hist
        l1n = predict(c.b_prime, e_prev, h1p, h1n)
        self.odd_held = False
        if r >= 4:
            h2n = predict(c.c_prime, h1_hist, l1_hist, l1n)
            h2p = h2n if r == 4 else h2_hist
            l2n = predict(c.d_prime, l1_hist, h2p, h2n)
            self._queue(r // 2 - 2, c.k1 * l2n, c.k0 * h2n, n)
        if r == self.H:
            h2e = predict(c.c_prime, h1n, l1n, l1n)
            l2e = predict(c.d_prime, l1n, h2n, h2e)
            self._queue(r // 2 - 1, c.k1 * l2e, c.k0 * h2e, n)
            self.cp_live = 0
            return
        h1_hist[...] = h1n
        l1_hist[...] = l1n
        if r >= 4:
            h2_hist[...] = h2n
        e_prev[...] = incoming
        self.cp_live = 4 if r >= 4 else 3

    def _queue(self, row, low, high, n):
        # columns are ordered L columns then H columns
        issued = self.cycle - RP_STAGES
        for kind, cols in (("L", slice(0, n)), ("H", slice(n, 2 * n))):
            vals = np.concatenate([low[:, cols], high[:, cols]], axis=1)
            self.pending.append(_Group(kind, row, self.cp_pairs, vals, issued))

    # temporal processor -----------------------------------------------------

    def tp_finish(self, g: _Group):
        n = len(g.pairs)
        a, b = g.values[0], g.values[1]
        lo_t, hi_t = forward_haar(a, b)
        names = ("LL", "LH") if g.kind == "L" else ("HL", "HH")
        for t, vals in (("L", lo_t), ("H", hi_t)):
            self.out[(t, names[0])][g.row, g.pairs] = vals[:n]
            self.out[(t, names[1])][g.row, g.pairs] = vals[n:]
        self.emits_3d.append((self.cycle, g.kind, g.row, g.issued))
        self.words_3d[self.cycle] = self.words_3d.get(self.cycle, 0) + 2 * g.words

    # clock ------------------------------------------------------------------

    def busy(self) -> bool:
        return (
            self.issue_slot(self.cycle) is not None
            or any(self.rp_tags) or any(self.cp_tags) or any(self.tp_tags) or bool(self.pending)
        )

    def step(self) -> dict:
        """Advance every pipeline by one clock; returns the cycle's events."""
        t = self.cycle
        events = {"cycle": t, "read": None, "emit_2d": None, "emit_3d": None}
        # TP: stage 1 leaves, stage 0 moves on, CP output enters stage 0
        done = self.tp_tags[1]
        if done is not None:
            self.tp_finish(done)
            events["emit_3d"] = (done.kind, done.row)
        self.tp_tags[1] = self.tp_tags[0]
        if self.tp_tags[1] is not None:
            w = self.tp_tags[1].words
            self.tp[:, 2 * self.P : 2 * self.P + w] = self.tp[:, :w]
        k = t % CP_STAGES
        leaving = self.cp_tags[k]
        self.tp_tags[0] = leaving
        if leaving is not None:
            self.tp[:, : leaving.words] = self.cp_latch[:, k, : leaving.words]
            self.emits_2d.append((t, leaving.kind, leaving.row, leaving.issued))
            events["emit_2d"] = (leaving.kind, leaving.row)
        self.cp_tags[k] = None
        # CP: consume the RP result issued RP_STAGES cycles ago
        j = t % RP_STAGES
        tag = self.rp_tags[j]
        self.rp_tags[j] = None
        if tag is not None:
            self.cp_accept(tag)
        if self.pending:
            g = self.pending.popleft()
            self.cp_latch[:, k, : g.words] = g.values
            self.cp_tags[k] = g
        # RP: issue the scheduled row
        slot = self.issue_slot(t)
        if slot is not None:
            s, r = slot
            if r < self.H:
                if s == self.strips:
                    L, H = self.rp_drain_row(r)
                else:
                    L, H = self.rp_row(s, r)
                    events["read"] = self.reads[-1][1:]
                self.rp_latch[:, j, :, 0] = L
                self.rp_latch[:, j, :, 1] = H
            self.rp_tags[j] = (s, r, j)
        self._account()
        self.cycle += 1
        return events

    def _account(self):
        n = max(self.cp_n, 1)
        valid = lambda tag: int(self.lanes(tag[0])[1].sum()) if tag and tag[1] < self.H else 0
        use = {
            "row_memory_words": 3 * self.H,
            "transpose_register_words": 2 * n * (1 + self.odd_held),
            "rp_latch_words": 2 * sum(valid(tg) for tg in self.rp_tags),
            "cp_latch_words": sum(g.words for g in self.cp_tags if g is not None),
            "cp_shift_register_words": 2 * n * self.cp_live + sum(g.words for g in self.pending),
            "rearrange_words": n,
            "tp_pipeline_words": sum(g.words for g in self.tp_tags if g is not None),
        }
        caps = self.ledger.items()
        for key, words in use.items():
            if words > caps[key]:
                raise RuntimeError(f"{key}: {words} words in use exceeds ledger capacity {caps[key]} at cycle {self.cycle}")
            self.peak[key] = max(self.peak[key], words)
        if self.trace:
            row = {"cycle": self.cycle}
            row.update(use)
            row["outputs_3d"] = self.words_3d.get(self.cycle, 0)
            self.occupancy.append(row)


def _validate(pair, P):
    _check_p(P)
    if isinstance(pair, (tuple, list)):
        f0, f1 = pair
    else:
        f0, f1 = pair.first, pair.second
    x = np.stack([np.asarray(f0, dtype=np.float64), np.asarray(f1, dtype=np.float64)])
    if x.ndim != 3 or x.shape[1:] != np.asarray(f1).shape:
        raise ValidationError("frame pair must hold two 2-D frames of equal shape")
    _, H, W = x.shape
    if W % (2 * P):
        raise ValidationError(f"width {W} is not divisible by 2P = {2 * P}")
    if H % 2 or H < 2 * (2 * P + 1) or W < 2 * (2 * P + 1):
        raise ValidationError(f"{W}x{H} frame too small for P={P}; need even sizes >= {2 * (2 * P + 1)}")
    return x


def _steady_rate(dp: _Datapath) -> float:
    # interior rows of a strip that is neither the first nor the drain
    s = dp.strips // 2 if dp.strips > 2 else 1
    base = s * (dp.H + 1) + LATENCY_3D
    lo, hi = base + 8, base + dp.H - 4
    window = [dp.words_3d.get(t, 0) for t in range(lo, hi)]
    return float(np.mean(window)) if window else 0.0


def _first_latency(emits):
    # first output of every strip: issued row -> emit cycle
    seen = {}
    for cycle, kind, row, issued in emits:
        if kind == "L" and row == 0:
            seen.setdefault(issued, cycle - issued)
    return sorted(set(seen.values()))


def simulate_pair(pair, P: int = 2, coeffs: LiftingCoeffs | None = None, trace: bool = False) -> SimReport:
    """Run one frame pair through the datapath model."""
    coeffs = coeffs or LiftingCoeffs.fixed_adopted()
    x = _validate(pair, P)
    dp = _Datapath(x, P, coeffs, trace)
    if dp.allocated_words() != dp.ledger.total_words:
        raise RuntimeError(f"allocated {dp.allocated_words()} words, ledger says {dp.ledger.total_words}")
    while dp.busy():
        dp.step()
    lat2 = _first_latency(dp.emits_2d)
    lat3 = _first_latency(dp.emits_3d)
    if len(lat2) != 1 or len(lat3) != 1:
        raise RuntimeError(f"latency is not constant across strips: 2-D {lat2}, 3-D {lat3}")
    frames = {}
    for t in "LH":
        d = {b: dp.out[(t, b)] for b in ("LH", "HL", "HH")}
        frames[t] = SubbandGrid(details=[d], ll=dp.out[(t, "LL")])
    ideal = dp.H * dp.W // (2 * P) + LATENCY_3D
    breakdown = {
        "strip_bubbles": dp.strips,
        "edge_drain": dp.H + 1,
        "flush_tail": dp.cycle - ideal - dp.strips - (dp.H + 1),
    }
    return SimReport(
        total_cycles=dp.cycle,
        latency_2d=lat2[0],
        latency_3d=lat3[0],
        outputs_per_cycle_steady=_steady_rate(dp),
        ledger=dp.ledger,
        output=Gof3D(frames["L"], frames["H"]),
        strips=dp.strips,
        slack=dp.cycle - ideal,
        slack_breakdown=breakdown,
        allocated_words=dp.allocated_words(),
        peak_usage=dict(dp.peak),
        occupancy=dp.occupancy,
    )


def trace_reads(pair, P: int, cycles: int, coeffs: LiftingCoeffs | None = None) -> list:
    """Pixel reads of the first ``cycles`` clocks: ``(cycle, row, col0, col1)``."""
    x = _validate(pair, P)
    dp = _Datapath(x, P, coeffs or LiftingCoeffs.fixed_adopted(), False)
    out = []
    for _ in range(cycles):
        ev = dp.step()
        if ev["read"] is not None:
            out.append((ev["cycle"],) + ev["read"])
    return out
