import numpy as np
import pytest

from csvideo.errors import CodecIOError, ValidationError
from csvideo.video_io import group_pairs, load_frames, write_frames


def test_raw_zero_frames(tmp_path):
    p = tmp_path / "z.raw"
    p.write_bytes(bytes(128))
    frames = load_frames(p, "raw", 8, 8, 2)
    assert len(frames) == 2 and all(np.all(f == 0) for f in frames)


def test_pgm_read(tmp_path, rng):
    img = rng.integers(0, 256, (16, 16), dtype=np.uint8)
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n# comment\n16 16\n255\n" + img.tobytes())
    (frame,) = load_frames(p, "pgm", 16, 16, 1)
    assert np.array_equal(frame, img)


def test_truncated_raw(tmp_path):
    p = tmp_path / "short.raw"
    p.write_bytes(bytes(100))
    with pytest.raises(CodecIOError, match="expected 128, got 100"):
        load_frames(p, "raw", 8, 8, 2)


def test_odd_dimensions(tmp_path):
    p = tmp_path / "x.raw"
    p.write_bytes(bytes(81))
    with pytest.raises(ValidationError):
        load_frames(p, "raw", 9, 9, 1)


@pytest.mark.parametrize("fmt", ["raw", "pgm"])
def test_roundtrip(tmp_path, rng, fmt):
    frames = [rng.integers(0, 256, (8, 12), dtype=np.uint8) for _ in range(3)]
    p = tmp_path / f"seq.{fmt}"
    n = write_frames(frames, p, fmt)
    assert n == p.stat().st_size
    back = load_frames(p, fmt, 12, 8, 3)
    assert all(np.array_equal(a, b) for a, b in zip(frames, back))


def test_clamp_on_write(tmp_path):
    p = tmp_path / "c.raw"
    write_frames([np.full((8, 8), 260.0), np.full((8, 8), -4.0), np.full((8, 8), 7.5)], p, "raw")
    a, b, c = load_frames(p, "raw", 8, 8, 3)
    assert np.all(a == 255) and np.all(b == 0) and np.all(c == 8)


def test_write_errors(tmp_path):
    with pytest.raises(ValidationError):
        write_frames([], tmp_path / "e.raw", "raw")
    with pytest.raises(CodecIOError):
        write_frames([np.zeros((8, 8))], tmp_path / "missing" / "dir" / "x.raw", "raw")


def test_group_pairs():
    f = [np.full((8, 8), i) for i in range(4)]
    pairs = group_pairs(f)
    assert [(int(p.first[0, 0]), int(p.second[0, 0])) for p in pairs] == [(0, 1), (2, 3)]
    (single,) = group_pairs(f[:1])
    assert single.duplicated and single.first is single.second
    with pytest.raises(ValidationError):
        group_pairs([])
