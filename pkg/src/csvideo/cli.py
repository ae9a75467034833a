"""Command-line front end: ``encode``, ``decode``, ``simulate``, ``report``.

Results are printed as ``key=value`` lines. Exit codes: 0 success,
2 invalid arguments or configuration, 3 file I/O, 4 malformed bitstream.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import codec
from .bitstream import unpack
from .errors import CodecError, CodecIOError, ValidationError
from .lifting import LiftingCoeffs
from .metrics import sequence_psnr
from .recovery import SolverConfig
from .strip_sim import simulate_pair
from .synthetic import SEQUENCES, make_sequence
from .video_io import FORMATS, load_frames, write_frames

REPORT_FIELDS = ["sequence", "level", "psnr", "cr", "measurement_pct", "bytes", "threshold", "par", "mode", "seed"]


def _threshold(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(value) or value < 0:
        raise argparse.ArgumentTypeError("threshold must be >= 0 (or 'inf')")
    return value


def _seed(text: str) -> int:
    return int(text, 0)


def _add_common(p, frames=True):
    p.add_argument("--width", type=int, help="frame width in pixels")
    p.add_argument("--height", type=int, help="frame height in pixels")
    if frames:
        p.add_argument("--frames", type=int, default=2, help="number of frames (default 2)")
    p.add_argument("--par", type=int, default=codec.DEFAULT_PAR, help="parallelism P (default %(default)s)")
    p.add_argument("--mode", choices=("float", "fixed"), default="fixed", help="lifting coefficients")
    p.add_argument("--seed", type=_seed, default=codec.DEFAULT_SEED, help="Phi seed (default %(default)#x)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csvideo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode frames into a CSW1 container")
    src = enc.add_mutually_exclusive_group(required=True)
    src.add_argument("input", nargs="?", help="raw or PGM frame file")
    src.add_argument("--synthetic", choices=sorted(SEQUENCES), help="use a generated test sequence")
    enc.add_argument("-o", "--output", required=True, help="container path")
    enc.add_argument("--format", choices=FORMATS, default="raw")
    _add_common(enc)
    enc.add_argument("--levels", type=int, default=1)
    enc.add_argument("--threshold", type=_threshold, default=codec.DEFAULT_THRESHOLD)
    enc.add_argument("--psnr", action="store_true", help="decode in-process and report PSNR")
    enc.add_argument("--csv", help="append a summary row to this CSV file")
    enc.add_argument("--name", help="sequence name for the CSV row")

    dec = sub.add_parser("decode", help="decode a CSW1 container")
    dec.add_argument("input")
    dec.add_argument("-o", "--output", required=True)
    dec.add_argument("--format", choices=FORMATS, default="raw")
    dec.add_argument("--solver", choices=("amp", "iht"), default="amp")
    dec.add_argument("--max-iter", type=int, default=1000)
    dec.add_argument("--reference", help="original frames (same format) for PSNR")

    sim = sub.add_parser("simulate", help="run one frame pair through the datapath model")
    sim.add_argument("input", nargs="?", help="raw or PGM file with at least two frames")
    sim.add_argument("--format", choices=FORMATS, default="raw")
    _add_common(sim, frames=False)
    sim.add_argument("--csv", help="write per-cycle occupancy to this CSV file")

    rep = sub.add_parser("report", help="merge summary CSVs into one table")
    rep.add_argument("csvs", nargs="*")
    rep.add_argument("-o", "--output", help="also write the merged table as CSV")
    return parser


def _emit(lines):
    for line in lines:
        print(line)


def _need_dims(args):
    if args.width is None or args.height is None:
        raise ValidationError("--width and --height are required")


def cmd_encode(args) -> int:
    if args.synthetic:
        size = args.width or 64
        if args.height not in (None, size):
            raise ValidationError("synthetic sequences are square; give --width only")
        frames = make_sequence(args.synthetic, size, args.frames, seed=args.seed & 0xFFFF)
        width = height = size
        name = args.name or args.synthetic
    else:
        _need_dims(args)
        width, height = args.width, args.height
        frames = load_frames(args.input, args.format, width, height, args.frames)
        name = args.name or Path(args.input).stem
    cfg = codec.EncodeConfig(
        width=width, height=height, levels=args.levels, threshold=args.threshold,
        par=args.par, mode=args.mode, seed=args.seed,
    )
    data, summary = codec.encode(frames, cfg)
    try:
        Path(args.output).write_bytes(data)
    except OSError as exc:
        raise CodecIOError(f"cannot write {args.output}: {exc}") from exc
    lines = summary.lines()
    quality = None
    if args.psnr:
        decoded, _ = codec.decode(data)
        quality = sequence_psnr(frames, decoded)
        lines.append(f"psnr={quality:.4f}")
    _emit(lines)
    if args.csv:
        row = {
            "sequence": name, "level": cfg.levels,
            "psnr": "" if quality is None else f"{quality:.4f}",
            "cr": f"{summary.cr:.4f}", "measurement_pct": f"{summary.measurement_pct:.4f}",
            "bytes": summary.bytes, "threshold": cfg.threshold, "par": cfg.par,
            "mode": cfg.mode, "seed": cfg.seed,
        }
        _append_csv(args.csv, row)
    return 0


def _append_csv(path, row):
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    try:
        with path.open("a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
            if new:
                writer.writeheader()
            writer.writerow(row)
    except OSError as exc:
        raise CodecIOError(f"cannot write {path}: {exc}") from exc


def cmd_decode(args) -> int:
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise CodecIOError(f"cannot read {args.input}: {exc}") from exc
    container = unpack(data)
    solver = SolverConfig(max_iterations=args.max_iter, solver=args.solver)
    frames, summary = codec.decode_container(container, solver)
    written = write_frames(frames, args.output, args.format)
    lines = summary.lines() + [f"bytes_written={written}"]
    if args.reference:
        h = container.header
        ref = load_frames(args.reference, args.format, h.width, h.height, h.frame_count)
        lines.append(f"psnr={sequence_psnr(ref, frames):.4f}")
    _emit(lines)
    return 0


def cmd_simulate(args) -> int:
    if args.input:
        _need_dims(args)
        f0, f1 = load_frames(args.input, args.format, args.width, args.height, 2)
    else:
        width = args.width or 64
        height = args.height or width
        rng = np.random.default_rng(args.seed)
        f0, f1 = (rng.integers(0, 256, (height, width)) for _ in range(2))
    report = simulate_pair((f0, f1), args.par, LiftingCoeffs.for_mode(args.mode), trace=bool(args.csv))
    _emit(report.lines())
    if args.csv:
        try:
            report.write_occupancy(args.csv)
        except OSError as exc:
            raise CodecIOError(f"cannot write {args.csv}: {exc}") from exc
    return 0


def _sort_key(row):
    try:
        level = int(row.get("level", 0))
    except ValueError:
        level = 0
    return row.get("sequence", ""), level


def merge_reports(paths) -> list:
    rows = []
    for path in paths:
        try:
            with open(path, newline="") as fh:
                rows.extend(csv.DictReader(fh))
        except OSError as exc:
            raise CodecIOError(f"cannot read {path}: {exc}") from exc
    return sorted(rows, key=_sort_key)


def format_table(rows) -> str:
    cols = ["sequence", "level", "psnr", "cr", "measurement_pct"]
    table = [cols] + [[str(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(t[i]) for t in table) for i in range(len(cols))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(t, widths)).rstrip() for t in table)


def cmd_report(args) -> int:
    rows = merge_reports(args.csvs)
    print(format_table(rows))
    if args.output:
        try:
            with open(args.output, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, extrasaction="ignore")
                writer.writeheader()
                writer.writerows(rows)
        except OSError as exc:
            raise CodecIOError(f"cannot write {args.output}: {exc}") from exc
    return 0


COMMANDS = {"encode": cmd_encode, "decode": cmd_decode, "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CodecIOError.exit_code


if __name__ == "__main__":
    sys.exit(main())
