import io

import numpy as np
import pytest
from PIL import Image

from scenechar.image import GrayImage, ImageDecodeError, load_image, resize_bilinear, write_pgm


def test_gray_image_validation():
    with pytest.raises(ValueError):
        GrayImage(np.array([[1.5]]))
    with pytest.raises(ValueError):
        GrayImage(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        GrayImage(np.zeros((0, 3)))
    img = GrayImage(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1.0


def test_side_requires_square():
    assert GrayImage(np.zeros((4, 4))).side == 4
    with pytest.raises(ValueError):
        GrayImage(np.zeros((4, 5))).side


def test_binary_pgm_all_white(tmp_path):
    p = tmp_path / "w.pgm"
    p.write_bytes(b"P5\n3 2\n255\n" + bytes([255] * 6))
    img = load_image(p)
    assert img.shape == (2, 3) and np.all(img.pixels == 1.0)


def test_ascii_pgm_with_comments(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_text("P2\n# a comment\n2 2\n# another\n4\n0 1\n2 4\n")
    assert np.array_equal(load_image(p).pixels, [[0, 0.25], [0.5, 1.0]])


def test_sixteen_bit_pgm(tmp_path):
    p = tmp_path / "b.pgm"
    p.write_bytes(b"P5\n2 1\n65535\n" + np.array([0, 65535], dtype=">u2").tobytes())
    assert np.array_equal(load_image(p).pixels, [[0.0, 1.0]])


def test_pgm_roundtrip(tmp_path, rng):
    pix = np.rint(rng.random((5, 7)) * 255) / 255
    write_pgm(tmp_path / "r.pgm", pix)
    assert np.array_equal(load_image(tmp_path / "r.pgm").pixels, pix)


def test_png_red_pixel_luma(tmp_path):
    p = tmp_path / "red.png"
    Image.new("RGB", (1, 1), (255, 0, 0)).save(p)
    assert load_image(p).pixels[0, 0] == pytest.approx(0.299, abs=1e-12)


def test_png_gray_and_alpha(tmp_path):
    Image.new("L", (2, 2), 51).save(tmp_path / "g.png")
    assert np.allclose(load_image(tmp_path / "g.png").pixels, 0.2)
    Image.new("RGBA", (1, 1), (0, 255, 0, 10)).save(tmp_path / "a.png")
    assert load_image(tmp_path / "a.png").pixels[0, 0] == pytest.approx(0.587)


@pytest.mark.parametrize(
    "data",
    [b"P5\n4 4\n255\n" + bytes(5), b"P2\n2 2\n255\n1 2 3\n", b"P5\n4", b"P5\n0 3\n255\n"],
)
def test_bad_pgm_names_path(tmp_path, data):
    p = tmp_path / "broken.pgm"
    p.write_bytes(data)
    with pytest.raises(ImageDecodeError, match="broken.pgm"):
        load_image(p)


def test_truncated_png_names_path(tmp_path):
    buf = io.BytesIO()
    Image.new("L", (16, 16), 3).save(buf, format="PNG")
    p = tmp_path / "cut.png"
    p.write_bytes(buf.getvalue()[:30])
    with pytest.raises(ImageDecodeError, match="cut.png"):
        load_image(p)


def test_missing_and_empty_files(tmp_path):
    with pytest.raises(ImageDecodeError, match="nope.pgm"):
        load_image(tmp_path / "nope.pgm")
    (tmp_path / "empty.pgm").write_bytes(b"")
    with pytest.raises(ImageDecodeError, match="empty.pgm"):
        load_image(tmp_path / "empty.pgm")


@pytest.mark.parametrize("shape", [(1, 1), (7, 3), (64, 64), (100, 45)])
def test_resize_constant(shape):
    out = resize_bilinear(GrayImage(np.full(shape, 0.37)))
    assert out.shape == (32, 32)
    assert np.max(np.abs(out.pixels - 0.37)) <= 1e-15


def test_resize_block_pattern_stays_in_neighborhood(rng):
    blocks = rng.random((32, 32))
    src = np.kron(blocks, np.ones((2, 2)))
    out = resize_bilinear(GrayImage(src)).pixels
    # pixel-center alignment: output (i, j) samples source (2i + 0.5, 2j + 0.5)
    for i in range(32):
        for j in range(32):
            nb = src[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
            assert nb.min() - 1e-12 <= out[i, j] <= nb.max() + 1e-12
    assert np.allclose(out, blocks, atol=1e-12)


def test_resize_identity(rng):
    src = rng.random((32, 32))
    out = resize_bilinear(GrayImage(src, label="q"))
    assert np.max(np.abs(out.pixels - src)) <= 1e-12 and out.label == "q"


def test_resize_upsample_matches_formula():
    src = np.array([[0.0, 1.0]])
    out = resize_bilinear(GrayImage(src), 4).pixels
    # source x = (dst + 0.5) / 2 - 0.5, clamped to [0, 1]
    xs = np.clip((np.arange(4) + 0.5) / 2 - 0.5, 0, 1)
    assert np.allclose(out, np.tile(xs, (4, 1)), atol=1e-15)


def test_resize_rejects_bad_side():
    with pytest.raises(ValueError):
        resize_bilinear(GrayImage(np.zeros((3, 3))), 0)
