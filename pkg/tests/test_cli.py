"""End-to-end command-line behavior, exit codes and file outputs."""

import math
import os

import numpy as np
import pytest

from dehaze import cli, imgio, network
from dehaze.tensor import save_dft1


def run(capsys, *argv):
    rc = cli.main(list(argv))
    out = capsys.readouterr().out
    kv = {}
    for ln in out.strip().splitlines():
        if "=" in ln:
            k, _, v = ln.partition("=")
            kv[k] = v
    return rc, kv, out


def quantized_ppm(path, seed=0, h=32, w=32):
    levels = np.random.default_rng(seed).integers(0, 256, (1, h, w, 3))
    img = levels.astype(np.float32) / 255.0
    imgio.write_ppm(path, img)
    return img


class TestCount:
    def test_tiny_band(self, capsys):
        rc, kv, _ = run(capsys, "count", "--variant", "T", "--size", "256x256")
        assert rc == 0
        params, macs = int(kv["params"]), int(kv["macs"])
        assert abs(params - 686_000) / 686_000 < 0.20
        assert abs(macs - 6.658e9) / 6.658e9 < 0.20
        assert "stage3_macs" in kv

    def test_s_vs_t_ratio(self, capsys):
        _, kv_t, _ = run(capsys, "count", "--variant", "T")
        _, kv_s, _ = run(capsys, "count", "--variant", "S")
        ratio = int(kv_s["macs"]) / int(kv_t["macs"])
        assert ratio == pytest.approx(2.0, rel=0.05)

    def test_bad_variant_usage_error(self, capsys):
        rc, _, _ = run(capsys, "count", "--variant", "X")
        assert rc == cli.EXIT_USAGE

    def test_bad_size_usage_error(self, capsys):
        rc, _, _ = run(capsys, "count", "--variant", "T", "--size", "10x11")
        assert rc == cli.EXIT_USAGE

    def test_figures_written(self, capsys, tmp_path):
        fig = tmp_path / "figs"
        rc, kv, _ = run(capsys, "count", "--variant", "T", "--size", "64x64",
                        "--figures", str(fig))
        assert rc == 0
        assert os.path.getsize(kv["figure_overhead"]) > 0


class TestInfer:
    def test_zero_head_roundtrips_bit_exact(self, capsys, tmp_path):
        spec, store = network.build("T", seed=0)
        store._arrays["head.k"] = np.zeros_like(store["head.k"])
        store._arrays["head.b"] = np.zeros_like(store["head.b"])
        stem = tmp_path / "zero"
        store.save(stem)
        src = tmp_path / "in.ppm"
        quantized_ppm(src, seed=1)
        dst = tmp_path / "out.ppm"
        rc, _, _ = run(capsys, "infer", "--variant", "T", "--weights", str(stem),
                       "--in", str(src), "--out", str(dst))
        assert rc == 0
        assert src.read_bytes() == dst.read_bytes()

    def test_seeded_inference_deterministic(self, capsys, tmp_path):
        src = tmp_path / "in.ppm"
        quantized_ppm(src, seed=2)
        outs = []
        for name in ("a.ppm", "b.ppm"):
            dst = tmp_path / name
            rc, _, _ = run(capsys, "infer", "--variant", "T", "--seed", "5",
                           "--in", str(src), "--out", str(dst))
            assert rc == 0
            outs.append(dst.read_bytes())
        assert outs[0] == outs[1]

    def test_pad_flag_restores_extents(self, capsys, tmp_path):
        src = tmp_path / "odd.ppm"
        quantized_ppm(src, seed=3, h=30, w=32)
        dst = tmp_path / "out.ppm"
        rc, _, _ = run(capsys, "infer", "--variant", "T", "--seed", "1",
                       "--in", str(src), "--out", str(dst), "--pad")
        assert rc == 0
        assert imgio.read_ppm(dst).shape == (1, 30, 32, 3)

    def test_unpadded_odd_extents_rejected(self, capsys, tmp_path):
        src = tmp_path / "odd.ppm"
        quantized_ppm(src, seed=4, h=30, w=32)
        rc, _, _ = run(capsys, "infer", "--variant", "T", "--seed", "1",
                       "--in", str(src), "--out", str(tmp_path / "o.ppm"))
        assert rc == cli.EXIT_VALIDATION

    def test_missing_input_io_error(self, capsys, tmp_path):
        rc, _, _ = run(capsys, "infer", "--variant", "T", "--seed", "1",
                       "--in", str(tmp_path / "nope.ppm"),
                       "--out", str(tmp_path / "o.ppm"))
        assert rc == cli.EXIT_IO

    def test_mismatched_weights_validation_error(self, capsys, tmp_path):
        _, store = network.build("T", seed=0)
        stem = tmp_path / "tiny"
        store.save(stem)
        src = tmp_path / "in.ppm"
        quantized_ppm(src, seed=5)
        rc, _, _ = run(capsys, "infer", "--variant", "L", "--weights", str(stem),
                       "--in", str(src), "--out", str(tmp_path / "o.ppm"))
        assert rc == cli.EXIT_VALIDATION


def make_ms_dir(root, names=("B2", "B3", "B4", "B6", "B7"), h=24, w=24, seed=7):
    from dehaze.hazegen import LANDSAT8_WAVELENGTHS
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for name in names:
        raster = (rng.random((h, w)) * 0.9 + 0.05).astype(np.float32)
        save_dft1(root / f"{name}.dft1", raster[None, :, :, None])
    lines = [f"{n} {LANDSAT8_WAVELENGTHS[n]}" for n in names]
    (root / "wavelengths.txt").write_text("\n".join(lines) + "\n")
    cirrus = rng.random((h, w)).astype(np.float32)
    save_dft1(root / "cirrus.dft1", cirrus[None, :, :, None])


class TestSynth:
    def test_light_density_manifest(self, capsys, tmp_path):
        src = tmp_path / "ms"
        make_ms_dir(src)
        out = tmp_path / "hazy"
        rc, kv, _ = run(capsys, "synth", "--in", str(src),
                        "--cirrus", str(src / "cirrus.dft1"),
                        "--density", "L", "--seed", "3", "--out", str(out))
        assert rc == 0
        omega = float(kv["omega"])
        assert 0.100 <= omega <= 0.399
        manifest = (out / "manifest.txt").read_text()
        assert f"omega={omega:.6f}" in manifest
        assert (out / "B2.dft1").exists()

    def test_seeded_reruns_byte_identical(self, capsys, tmp_path):
        src = tmp_path / "ms"
        make_ms_dir(src)
        blobs = []
        for name in ("h1", "h2"):
            out = tmp_path / name
            rc, _, _ = run(capsys, "synth", "--in", str(src),
                           "--cirrus", str(src / "cirrus.dft1"),
                           "--density", "M", "--seed", "11", "--out", str(out))
            assert rc == 0
            blobs.append((out / "B4.dft1").read_bytes()
                         + (out / "manifest.txt").read_bytes())
        assert blobs[0] == blobs[1]

    def test_zero_cirrus_passthrough(self, capsys, tmp_path):
        src = tmp_path / "ms"
        make_ms_dir(src, h=16, w=16)
        zero = tmp_path / "zero.dft1"
        save_dft1(zero, np.zeros((1, 16, 16, 1), np.float32))
        out = tmp_path / "hazy"
        rc, _, _ = run(capsys, "synth", "--in", str(src), "--cirrus", str(zero),
                       "--density", "L", "--seed", "1", "--out", str(out))
        assert rc == 0
        for name in ("B2", "B4"):
            assert ((out / f"{name}.dft1").read_bytes()
                    == (src / f"{name}.dft1").read_bytes())

    def test_missing_sidecar_io_error(self, capsys, tmp_path):
        src = tmp_path / "empty"
        src.mkdir()
        rc, _, _ = run(capsys, "synth", "--in", str(src),
                       "--cirrus", str(src / "c.dft1"),
                       "--out", str(tmp_path / "o"))
        assert rc == cli.EXIT_IO

    def test_rgb_renders(self, capsys, tmp_path):
        src = tmp_path / "ms"
        make_ms_dir(src)
        out = tmp_path / "hazy"
        rc, _, _ = run(capsys, "synth", "--in", str(src),
                       "--cirrus", str(src / "cirrus.dft1"),
                       "--density", "D", "--seed", "2", "--out", str(out),
                       "--rgb")
        assert rc == 0
        assert imgio.read_ppm(out / "hazy.ppm").shape == (1, 24, 24, 3)
        assert imgio.read_ppm(out / "clean.ppm").shape == (1, 24, 24, 3)

    def test_fixed_omega_flag(self, capsys, tmp_path):
        src = tmp_path / "ms"
        make_ms_dir(src)
        rc, kv, _ = run(capsys, "synth", "--in", str(src),
                        "--cirrus", str(src / "cirrus.dft1"),
                        "--omega", "0.42", "--seed", "1",
                        "--out", str(tmp_path / "o"))
        assert rc == 0
        assert float(kv["omega"]) == pytest.approx(0.42)


class TestCheck:
    def test_activations_suite_passes(self, capsys):
        rc, kv, out = run(capsys, "check", "--suite", "activations")
        assert rc == 0
        assert kv["checks_failed"] == "0"
        assert kv["soft_relu_derivative_fd"] == "pass"

    def test_unknown_suite_usage_error(self, capsys):
        rc, _, _ = run(capsys, "check", "--suite", "bogus")
        assert rc == cli.EXIT_USAGE

    def test_figures_for_activations(self, capsys, tmp_path):
        rc, kv, _ = run(capsys, "check", "--suite", "activations",
                        "--figures", str(tmp_path))
        assert rc == 0
        assert os.path.getsize(kv["figure_activations"]) > 0


class TestMetricsCmd:
    def test_identical_files(self, capsys, tmp_path):
        p = tmp_path / "img.ppm"
        quantized_ppm(p, seed=8, h=16, w=16)
        rc, kv, _ = run(capsys, "metrics", "--a", str(p), "--b", str(p))
        assert rc == 0
        assert kv["psnr"] == "inf"
        assert float(kv["ssim"]) == pytest.approx(1.0)

    def test_one_level_offset(self, capsys, tmp_path):
        a = np.full((1, 16, 16, 3), 100 / 255.0, np.float32)
        b = np.full((1, 16, 16, 3), 101 / 255.0, np.float32)
        pa, pb = tmp_path / "a.ppm", tmp_path / "b.ppm"
        imgio.write_ppm(pa, a)
        imgio.write_ppm(pb, b)
        rc, kv, _ = run(capsys, "metrics", "--a", str(pa), "--b", str(pb))
        assert rc == 0
        assert float(kv["psnr"]) == pytest.approx(20 * math.log10(255), abs=1e-3)

    def test_size_mismatch_rejected(self, capsys, tmp_path):
        pa, pb = tmp_path / "a.ppm", tmp_path / "b.ppm"
        quantized_ppm(pa, seed=9, h=16, w=16)
        quantized_ppm(pb, seed=9, h=20, w=16)
        rc, _, _ = run(capsys, "metrics", "--a", str(pa), "--b", str(pb))
        assert rc == cli.EXIT_VALIDATION

    def test_error_map_figure(self, capsys, tmp_path):
        pa, pb = tmp_path / "a.ppm", tmp_path / "b.ppm"
        quantized_ppm(pa, seed=10, h=16, w=16)
        quantized_ppm(pb, seed=11, h=16, w=16)
        rc, kv, _ = run(capsys, "metrics", "--a", str(pa), "--b", str(pb),
                        "--figures", str(tmp_path))
        assert rc == 0
        assert os.path.getsize(kv["figure_error_map"]) > 0
