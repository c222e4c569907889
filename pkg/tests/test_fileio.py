import io
import json
import struct

import numpy as np
import pytest

from latentdolly import (
    BinaryMask,
    ConfigError,
    FormatError,
    TruncationError,
    UnsupportedFormatError,
)
from latentdolly.fileio import (
    MAGIC,
    format_number,
    load_strict_json,
    read_depth,
    read_image_ppm,
    read_latent,
    read_mask,
    write_csv,
    write_depth_f32r,
    write_image_ppm,
    write_latent,
    write_mask,
    write_mask_pgm,
)
from conftest import gtensor

DIMS = (1, 2, 4, 6, 6)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_latent_round_trip_bit_exact(tmp_path, dtype):
    t = gtensor(DIMS, "x", dtype=dtype)
    p = tmp_path / "t.krnr"
    write_latent(p, t)
    back = read_latent(p)
    assert back.dims == t.dims
    assert back.dtype == t.dtype
    assert back.data.tobytes() == t.data.tobytes()


def test_write_read_write_is_byte_identical(tmp_path):
    t = gtensor(DIMS, "x", dtype=np.float32)
    p1, p2 = tmp_path / "a.krnr", tmp_path / "b.krnr"
    write_latent(p1, t)
    write_latent(p2, read_latent(p1))
    assert p1.read_bytes() == p2.read_bytes()


def test_latent_header_layout(tmp_path):
    t = gtensor(DIMS, "x", dtype=np.float32)
    p = tmp_path / "t.krnr"
    write_latent(p, t)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC == b"KRNR"
    version, tag = struct.unpack_from("<HH", raw, 4)
    assert version == 1 and tag == 0
    assert struct.unpack_from("<5I", raw, 8) == DIMS
    assert len(raw) == 28 + t.size * 4


def test_bad_magic_names_offset(tmp_path):
    p = tmp_path / "bad.krnr"
    p.write_bytes(b"NOPE" + b"\x00" * 40)
    with pytest.raises(FormatError) as exc:
        read_latent(p)
    assert exc.value.offset == 0


def test_unknown_version_and_dtype_tag(tmp_path):
    t = gtensor(DIMS, "x", dtype=np.float32)
    p = tmp_path / "t.krnr"
    write_latent(p, t)
    raw = bytearray(p.read_bytes())
    raw[4:6] = struct.pack("<H", 9)
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_latent(p)
    raw[4:6] = struct.pack("<H", 1)
    raw[6:8] = struct.pack("<H", 7)
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_latent(p)


def test_truncated_payload_raises(tmp_path):
    t = gtensor(DIMS, "x", dtype=np.float32)
    p = tmp_path / "t.krnr"
    write_latent(p, t)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(TruncationError):
        read_latent(p)
    p.write_bytes(b"KRNR\x01\x00")
    with pytest.raises(TruncationError):
        read_latent(p)


def test_mask_round_trip(tmp_path):
    m = BinaryMask((np.arange(np.prod(DIMS)).reshape(DIMS) % 2).astype(np.uint8))
    p = tmp_path / "m.krnr"
    write_mask(p, m)
    back = read_mask(p)
    assert np.array_equal(back.data, m.data)


def test_ppm_round_trip_exact(tmp_path):
    img = (np.arange(4 * 5 * 3).reshape(4, 5, 3) % 256).astype(np.uint8)
    p = tmp_path / "i.ppm"
    write_image_ppm(p, img)
    assert np.array_equal(read_image_ppm(p), img)


def test_ppm_float_input_rounds_half_up(tmp_path):
    img = np.full((2, 2, 3), 0.5)
    p = tmp_path / "i.ppm"
    write_image_ppm(p, img)
    assert read_image_ppm(p)[0, 0, 0] == 128  # floor(127.5 + 0.5)


def test_ascii_pnm_rejected(tmp_path):
    p = tmp_path / "a.ppm"
    p.write_bytes(b"P3\n2 2\n255\n" + b"0 " * 12)
    with pytest.raises(UnsupportedFormatError):
        read_image_ppm(p)


def test_pgm_mask_written_as_0_255(tmp_path):
    mask = np.array([[0, 1], [1, 0]], dtype=np.uint8)
    p = tmp_path / "m.pgm"
    write_mask_pgm(p, mask)
    raw = p.read_bytes()
    assert raw.startswith(b"P5\n2 2\n255\n")
    assert raw[-4:] == bytes([0, 255, 255, 0])


def test_depth_f32r_round_trip(tmp_path):
    d = np.arange(12, dtype=np.float32).reshape(3, 4) / 7.0
    p = tmp_path / "d.f32r"
    write_depth_f32r(p, d)
    assert np.array_equal(read_depth(p), d)


def test_depth_16bit_pgm_with_scale(tmp_path):
    vals = np.array([[100, 200], [300, 65535]], dtype=np.uint16)
    p = tmp_path / "d.pgm"
    with open(p, "wb") as f:
        f.write(b"P5\n2 2\n65535\n")
        f.write(vals.astype(">u2").tobytes())
    d = read_depth(p, scale=0.001)
    assert d[0, 0] == pytest.approx(0.1, rel=1e-6)
    assert d[1, 1] == pytest.approx(65.535, rel=1e-6)


def test_depth_8bit_pgm_rejected(tmp_path):
    p = tmp_path / "d.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
    with pytest.raises(UnsupportedFormatError):
        read_depth(p)


def test_format_number_nine_significant_digits():
    assert format_number(0.1234567894) == "0.123456789"
    assert format_number(3) == "3"
    assert format_number(1.0) == "1"
    assert format_number(1e-12) == "1e-12"


def test_write_csv_stable_bytes(tmp_path):
    rows = [(1, 0.5, 1 / 3), (2, 0.25, 2 / 3)]
    p = tmp_path / "r.csv"
    write_csv(p, rows, ["k", "a", "b"])
    buf = io.StringIO()
    write_csv(buf, rows, ["k", "a", "b"])
    assert p.read_text() == buf.getvalue()
    assert p.read_text().splitlines()[1] == "1,0.5,0.333333333"


def test_strict_json_rejects_unknown_key(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"frames": 4, "framez": 2}))
    with pytest.raises(ConfigError) as exc:
        load_strict_json(p, ("frames",))
    assert "framez" in str(exc.value)


def test_strict_json_rejects_non_object(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_strict_json(p, ())
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_strict_json(p, ())
