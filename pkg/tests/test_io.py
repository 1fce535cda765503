import numpy as np
import pytest

from blade.io import quantize_u8, read_image, write_image


@pytest.mark.parametrize("ext", ["pgm", "png"])
def test_gray_roundtrip(tmp_path, rng, ext):
    img = rng.integers(0, 256, (9, 13)).astype(np.float32)
    path = str(tmp_path / f"img.{ext}")
    write_image(path, img)
    back = read_image(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, img)


@pytest.mark.parametrize("ext", ["ppm", "png"])
def test_rgb_roundtrip(tmp_path, rng, ext):
    img = rng.integers(0, 256, (6, 5, 3)).astype(np.float32)
    path = str(tmp_path / f"img.{ext}")
    write_image(path, img)
    assert np.array_equal(read_image(path), img)


def test_round_half_away_and_clamp():
    vals = np.array([[-3.0, 0.49, 0.5, 100.5, 254.5, 300.0]], np.float32)
    assert np.array_equal(quantize_u8(vals), np.array([[0, 0, 1, 101, 255, 255]], np.uint8))


def test_pgm_header_with_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n3 2\n255\n" + bytes(range(6)))
    img = read_image(str(path))
    assert img.shape == (2, 3)
    assert img[1, 2] == 5.0


def test_pgm_truncated(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(ValueError, match="truncated"):
        read_image(str(path))


def test_wrong_magic(tmp_path):
    path = tmp_path / "m.pgm"
    path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(ValueError, match="magic"):
        read_image(str(path))


def test_unsupported_extension(tmp_path):
    with pytest.raises(ValueError, match="extension"):
        write_image(str(tmp_path / "x.tiff"), np.zeros((4, 4)))


def test_write_wrong_shape(tmp_path):
    with pytest.raises(ValueError):
        write_image(str(tmp_path / "x.pgm"), np.zeros((4, 4, 3)))
    with pytest.raises(ValueError):
        write_image(str(tmp_path / "x.ppm"), np.zeros((4, 4)))
