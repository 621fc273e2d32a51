import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sdspeckle.imageio import (
    ImageFormatError,
    pgm_scale,
    read_annotation,
    read_image,
    sidecar_path,
    write_annotation,
    write_image,
)
from sdspeckle.simulation import SITUATIONS, build_phantom


def test_plain_pgm(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_text("P2\n# tiny\n2 2\n15\n4 3\n2 1\n")
    assert np.array_equal(read_image(path), [[4, 3], [2, 1]])


def test_binary_pgm_8_and_16_bit(tmp_path):
    p8 = tmp_path / "b8.pgm"
    p8.write_bytes(b"P5 3 1 255\n" + bytes([1, 128, 255]))
    assert np.array_equal(read_image(p8), [[1, 128, 255]])
    p16 = tmp_path / "b16.pgm"
    p16.write_bytes(b"P5\n2 1\n65535\n" + np.array([300, 65535], ">u2").tobytes())
    assert np.array_equal(read_image(p16), [[300, 65535]])


@given(arrays(float, st.tuples(st.integers(1, 9), st.integers(1, 9)),
              elements=st.floats(1e-300, 1e300)))
def test_raw_round_trip_bitwise(tmp_path_factory, image):
    path = tmp_path_factory.mktemp("raw") / "x.raw"
    write_image(image, path)
    back = read_image(path)
    assert back.tobytes() == image.tobytes()


def test_sidecar_contents(tmp_path):
    path = tmp_path / "x.raw"
    write_image(np.ones((2, 3)), path)
    text = sidecar_path(path).read_text()
    assert "width = 3" in text and "height = 2" in text and "float64" in text


def test_truncated_raw(tmp_path):
    path = tmp_path / "x.raw"
    write_image(np.ones((4, 4)), path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ImageFormatError, match="expected 128 bytes, found 120"):
        read_image(path)


def test_truncated_pgm(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
    with pytest.raises(ImageFormatError, match="expected 16 bytes, found 10") as info:
        read_image(path)
    assert info.value.position == 11


@pytest.mark.parametrize(
    "payload, message",
    [(b"P6\n1 1\n255\n\x00", "magic"), (b"P2\n2 x\n255\n1 1", "integer"),
     (b"P2\n1 1\n0\n0", "maxval"), (b"P2\n2 2\n", "truncated"), (b"P2\n1 1\n9\n10", "above maxval")],
)
def test_malformed_pgm(tmp_path, payload, message):
    path = tmp_path / "m.pgm"
    path.write_bytes(payload)
    with pytest.raises(ImageFormatError, match=message):
        read_image(path)


def test_missing_sidecar(tmp_path):
    path = tmp_path / "lonely.raw"
    path.write_bytes(bytes(8))
    with pytest.raises(ImageFormatError, match="sidecar"):
        read_image(path)


def test_zero_pixels_logged(tmp_path, caplog):
    path = tmp_path / "z.pgm"
    path.write_text("P2\n3 1\n9\n0 2 5\n")
    with caplog.at_level(logging.WARNING):
        image = read_image(path)
    assert np.array_equal(image, [[2, 2, 5]])
    assert "1 zero-valued" in caplog.text


def test_pgm_write_rescales(tmp_path):
    path = tmp_path / "o.pgm"
    image = np.array([[2.0, 4.0], [6.0, 10.0]])
    write_image(image, path)
    back = read_image(path, sanitize=False)
    assert np.array_equal(back, [[0, 16384], [32768, 65535]])
    lo, hi = pgm_scale(path)
    np.testing.assert_allclose(lo + back / 65535 * (hi - lo), image, atol=(hi - lo) / 65535)


def test_constant_image_pgm_is_zero(tmp_path):
    path = tmp_path / "c.pgm"
    write_image(np.full((3, 3), 7.5), path)
    assert np.all(read_image(path, sanitize=False) == 0)
    assert pgm_scale(path) == (7.5, 7.5)


def test_write_error_names_path(tmp_path):
    with pytest.raises(OSError, match="nowhere"):
        write_image(np.ones((2, 2)), tmp_path / "nowhere" / "x.raw")


def test_annotation_round_trip(tmp_path):
    ann = build_phantom(SITUATIONS[1], 128).annotation
    write_annotation(ann, tmp_path / "a.json")
    assert read_annotation(tmp_path / "a.json") == ann


def test_malformed_annotation(tmp_path):
    (tmp_path / "a.json").write_text('{"lines": []}')
    with pytest.raises(ValueError, match="malformed"):
        read_annotation(tmp_path / "a.json")
