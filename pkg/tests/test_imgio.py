"""PPM / PAM / tensor file round-trips."""

import numpy as np
import pytest

from dehaze import imgio


def quantized_image(seed=0, h=6, w=8):
    levels = np.random.default_rng(seed).integers(0, 256, (1, h, w, 3))
    return (levels.astype(np.float32) / 255.0)


class TestPpm:
    def test_roundtrip_bitwise(self, tmp_path):
        x = quantized_image()
        p = tmp_path / "img.ppm"
        imgio.write_ppm(p, x)
        back = imgio.read_ppm(p)
        assert np.array_equal(back, x)

    def test_file_level_idempotent(self, tmp_path):
        x = quantized_image(1)
        p1, p2 = tmp_path / "a.ppm", tmp_path / "b.ppm"
        imgio.write_ppm(p1, x)
        imgio.write_ppm(p2, imgio.read_ppm(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_comments(self, tmp_path):
        p = tmp_path / "c.ppm"
        p.write_bytes(b"P6\n# a comment\n2 1\n255\n" + bytes(6))
        img = imgio.read_ppm(p)
        assert img.shape == (1, 1, 2, 3)

    def test_truncated_body(self, tmp_path):
        p = tmp_path / "t.ppm"
        p.write_bytes(b"P6\n4 4\n255\n" + bytes(10))
        with pytest.raises(imgio.ImageFormatError):
            imgio.read_ppm(p)

    def test_wrong_magic(self, tmp_path):
        p = tmp_path / "w.ppm"
        p.write_bytes(b"P5\n4 4\n255\n" + bytes(16))
        with pytest.raises(imgio.ImageFormatError):
            imgio.read_ppm(p)


class TestPam:
    def test_roundtrip_bitwise(self, tmp_path):
        levels = np.random.default_rng(3).integers(0, 65536, (1, 5, 7, 3))
        x = (levels.astype(np.float64) / 65535.0).astype(np.float32)
        p = tmp_path / "img.pam"
        imgio.write_pam(p, x)
        back = imgio.read_pam(p)
        # float32 cannot represent every n/65535 exactly; levels must match
        assert np.array_equal(np.rint(back * 65535), levels)

    def test_missing_endhdr(self, tmp_path):
        p = tmp_path / "bad.pam"
        p.write_bytes(b"P7\nWIDTH 2\n")
        with pytest.raises(imgio.ImageFormatError):
            imgio.read_pam(p)


class TestDispatch:
    def test_dft1_passthrough(self, tmp_path):
        x = quantized_image(4)
        p = tmp_path / "img.dft1"
        imgio.save_image(p, x)
        assert np.array_equal(imgio.load_image(p), x)

    def test_unknown_extension(self, tmp_path):
        with pytest.raises(imgio.ImageFormatError):
            imgio.load_image(tmp_path / "img.png")
