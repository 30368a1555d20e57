"""Command-line surface.

Five subcommands: ``count`` (overhead accounting), ``infer`` (restoration
forward pass), ``synth`` (multispectral haze synthesis), ``check``
(invariant suites) and ``metrics`` (PSNR/SSIM between two images).

Reports are machine-parsable key=value lines on stdout; prose goes to
stderr. Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 suite
failure. All randomness flows from ``--seed``; nothing reads ambient
entropy. With ``--figures DIR`` the report-producing commands also render
matplotlib figures into that directory.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import checks, hazegen, metrics, network
from .imgio import ImageFormatError, load_image, save_image, write_ppm
from .tensor import TensorFileError, load_dft1, save_dft1

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION, EXIT_SUITE = 0, 1, 2, 3, 4

WAVELENGTH_SIDECAR = "wavelengths.txt"
ATMO_SIDECAR = "atmo_means.txt"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except Exception as e:
        raise UsageError(f"size must look like 256x256, got {text!r}") from e
    if h <= 0 or w <= 0 or h % 4 or w % 4:
        raise UsageError(f"size {text} must be positive and divisible by 4")
    return h, w


def _emit(key, value):
    print(f"{key}={value}")


# ---------------------------------------------------------------------------


def cmd_count(args) -> int:
    if args.variant not in network.VARIANTS:
        raise UsageError(f"unknown variant {args.variant!r}; "
                         f"choose from {sorted(network.VARIANTS)}")
    h, w = _parse_size(args.size)
    spec = network.VARIANTS[args.variant]
    detail = network.count_detail(spec, h, w)
    params = sum(p for p, _ in detail.values())
    macs = sum(m for _, m in detail.values())
    _emit("variant", args.variant)
    _emit("input", f"{h}x{w}")
    _emit("params", params)
    _emit("macs", macs)
    for name, (p, m) in detail.items():
        _emit(f"{name}_params", p)
        _emit(f"{name}_macs", m)
    if args.figures:
        from . import figures
        out = figures.overhead_figure(
            os.path.join(args.figures, f"overhead_{args.variant}.png"),
            args.variant, detail)
        _emit("figure_overhead", out)
    return EXIT_OK


def _activation_from(name: str):
    from . import activations
    table = {"relu": activations.relu(), "leaky_relu": activations.leaky_relu(0.1),
             "gelu": activations.gelu(), "soft_relu": activations.soft_relu(0.1)}
    if name not in table:
        raise UsageError(f"unknown activation {name!r}; choose from {sorted(table)}")
    return table[name]


def cmd_infer(args) -> int:
    if args.variant not in network.VARIANTS:
        raise UsageError(f"unknown variant {args.variant!r}")
    act = _activation_from(args.act)
    spec = network.VARIANTS[args.variant]
    if args.weights:
        store = network.WeightStore.load(args.weights, spec)
    else:
        _, store = network.build(args.variant, seed=args.seed)

    img = load_image(getattr(args, "in"))
    if img.shape[3] != 3:
        raise ValueError(f"restoration expects 3 channels, got {img.shape[3]}")
    _, h, w, _ = img.shape
    pads = ((-h) % 4, (-w) % 4)
    if pads != (0, 0):
        if not args.pad:
            raise ValueError(
                f"input extents {h}x{w} not divisible by 4; rerun with --pad")
        img = np.pad(img, ((0, 0), (0, pads[0]), (0, pads[1]), (0, 0)),
                     mode="reflect")
    out = network.forward(spec, store, img, act)
    out = np.clip(out[:, :h, :w, :], 0.0, 1.0).astype(np.float32)
    save_image(args.out, out)
    print(f"wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def _read_sidecar(path) -> list[tuple[str, float]]:
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for ln in f:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            name, _, lam = ln.partition(" ")
            entries.append((name, float(lam)))
    if not entries:
        raise ValueError(f"{path}: no channel entries")
    return entries


def _load_raster(path) -> np.ndarray:
    t = load_dft1(path)
    if t.shape[0] != 1 or t.shape[3] != 1:
        raise ValueError(f"{path}: expected a (1,h,w,1) raster, got {t.shape}")
    return t[0, :, :, 0]


def _save_raster(path, raster: np.ndarray) -> None:
    save_dft1(path, raster.astype(np.float32)[None, :, :, None])


def cmd_synth(args) -> int:
    indir = getattr(args, "in")
    sidecar = os.path.join(indir, WAVELENGTH_SIDECAR)
    if not os.path.exists(sidecar):
        raise OSError(f"missing wavelength sidecar {sidecar}")
    channels = _read_sidecar(sidecar)
    names = [n for n, _ in channels]
    img = hazegen.MultiSpectralImage(
        names,
        [_load_raster(os.path.join(indir, f"{n}.dft1")) for n in names],
        [lam for _, lam in channels])

    rho_raw = _load_raster(args.cirrus)
    if np.ptp(rho_raw) == 0 and float(rho_raw.flat[0]) == 0.0:
        rho9 = np.zeros_like(rho_raw)  # haze-free template passes through
    else:
        rho9 = hazegen.stretch_cirrus(rho_raw)
    if rho9.shape != img.extents:
        raise ValueError(
            f"cirrus extents {rho9.shape} differ from image {img.extents}")

    rng = np.random.default_rng(args.seed)
    density = args.density
    if density == "mix":
        density = str(rng.choice(sorted(hazegen.DENSITY_RANGES)))
    if args.omega is not None:
        omega = args.omega
    else:
        omega = hazegen.sample_omega(density, rng)

    atmo = hazegen.estimate_atmo(img)
    means_path = os.path.join(indir, ATMO_SIDECAR)
    if os.path.exists(means_path):
        means = dict(_read_sidecar(means_path))
    else:
        means = dict(atmo)  # identity correction without dataset statistics
    if all(k in atmo and k in means for k in ("B6", "B7")):
        corrected = hazegen.correct_atmo(atmo, means)
    else:
        print("reference channels B6/B7 absent; skipping atmospheric-light "
              "correction", file=sys.stderr)
        corrected = dict(atmo)
    corrected = {k: float(np.clip(v, 1e-6, 1.0)) for k, v in corrected.items()}

    params = hazegen.SynthesisParams(omega=omega, xi=args.xi)
    hazy = hazegen.synthesize(img, rho9, params, corrected)

    os.makedirs(args.out, exist_ok=True)
    for name, raster in zip(hazy.names, hazy.rasters):
        _save_raster(os.path.join(args.out, f"{name}.dft1"), raster)
    with open(os.path.join(args.out, WAVELENGTH_SIDECAR), "w",
              encoding="utf-8") as f:
        for name, lam in channels:
            f.write(f"{name} {lam}\n")

    gmap = hazegen.gamma_map(omega * rho9.astype(np.float64))
    lines = [("density", density), ("omega", f"{omega:.6f}"),
             ("xi", f"{args.xi}"), ("seed", args.seed),
             ("gamma_min", f"{gmap.min():.6f}"),
             ("gamma_mean", f"{gmap.mean():.6f}"),
             ("gamma_max", f"{gmap.max():.6f}")]
    lines += [(f"atmo_{n}", f"{corrected[n]:.6f}") for n in hazy.names]
    with open(os.path.join(args.out, "manifest.txt"), "w", encoding="utf-8") as f:
        for k, v in lines:
            f.write(f"{k}={v}\n")
    for k, v in lines:
        _emit(k, v)

    rgb_bands = ("B4", "B3", "B2")
    have_rgb = all(b in names for b in rgb_bands)
    if args.rgb:
        if not have_rgb:
            raise ValueError(f"rgb render needs channels {rgb_bands}")
        clean = hazegen.rgb_render(img)
        hz = hazegen.rgb_render(hazy)
        write_ppm(os.path.join(args.out, "clean.ppm"),
                  (clean.astype(np.float32) / 255.0)[None])
        write_ppm(os.path.join(args.out, "hazy.ppm"),
                  (hz.astype(np.float32) / 255.0)[None])

    if args.figures:
        from . import figures
        _emit("figure_gamma",
              figures.gamma_figure(os.path.join(args.figures, "gamma_fit.png")))
        _emit("figure_transmission", figures.transmission_figure(
            os.path.join(args.figures, "transmission.png"), omega))
        if have_rgb:
            t1 = hazegen.transmission_ref(rho9, omega)
            _emit("figure_synthesis", figures.synthesis_figure(
                os.path.join(args.figures, "synthesis.png"),
                hazegen.rgb_render(img), hazegen.rgb_render(hazy), t1))
    return EXIT_OK


def cmd_check(args) -> int:
    results = checks.run_suite(args.suite, seed=args.seed)
    failed = 0
    for name, ok, detail in results:
        status = "pass" if ok else "fail"
        suffix = f" {detail}" if detail and not ok else ""
        _emit(name, status + suffix)
        failed += 0 if ok else 1
    _emit("checks_total", len(results))
    _emit("checks_failed", failed)
    if args.figures and args.suite in ("activations", "all"):
        from . import figures
        _emit("figure_activations", figures.activation_figure(
            os.path.join(args.figures, "activations.png")))
    return EXIT_OK if failed == 0 else EXIT_SUITE


def cmd_metrics(args) -> int:
    a = load_image(args.a)
    b = load_image(args.b)
    rep = metrics.report(a[0], b[0])
    for ln in rep.lines():
        print(ln)
    if args.figures:
        from . import figures
        _emit("figure_error_map", figures.error_map_figure(
            os.path.join(args.figures, "error_map.png"), a, b))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="dehaze", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="parameter and MAC accounting")
    p.add_argument("--variant", required=True)
    p.add_argument("--size", default="256x256")
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("infer", help="run the restoration forward pass")
    p.add_argument("--variant", required=True)
    p.add_argument("--weights", default=None, help="weight file stem")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pad", action="store_true",
                   help="reflect-pad to a multiple of 4 and crop back")
    p.add_argument("--act", default="relu")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("synth", help="synthesize hazy multispectral rasters")
    p.add_argument("--in", required=True, help="directory of channel tensors")
    p.add_argument("--cirrus", required=True, help="cirrus raster (.dft1)")
    p.add_argument("--density", default="mix",
                   choices=["L", "M", "D", "mix"])
    p.add_argument("--omega", type=float, default=None,
                   help="fix the haze density instead of sampling")
    p.add_argument("--xi", type=float, default=1.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--rgb", action="store_true",
                   help="also write 8-bit RGB renders")
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("check", help="run invariant suites")
    p.add_argument("--suite", default="all",
                   choices=sorted(checks.SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("metrics", help="PSNR/SSIM between two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageFormatError, TensorFileError) as e:
        print(f"unreadable input: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except (network.WeightStoreError, ValueError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
