"""Self-contained invariant suites behind the ``check`` command.

Each suite returns (name, passed, detail) tuples; the CLI prints one line
per property and fails the run if any property fails. The suites re-verify
the library's algebraic contracts at runtime with seeded inputs, so a
rebuilt or repacked installation can be validated without the test harness.
"""

from __future__ import annotations

import numpy as np

from . import activations as act
from . import attention as attn
from . import hazegen
from . import metrics
from . import network
from . import normalization as norm
from . import tensor


class CheckFailure(AssertionError):
    pass


def _result(name, passed, detail=""):
    return (name, bool(passed), detail)


def suite_tensor(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []

    x = rng.standard_normal((2, 6, 5, 4)).astype(np.float32)
    ker = np.zeros((3, 3, 1, 4), np.float32)
    ker[1, 1, 0, :] = 1.0
    ident = tensor.conv2d(x, ker, groups=4, pad_mode="zero")
    out.append(_result("conv2d_identity_kernel_exact", np.array_equal(ident, x)))

    rows = rng.standard_normal((7, 9))
    sm = tensor.softmax_lastdim(rows)
    sums = np.abs(sm.sum(axis=-1) - 1.0).max()
    out.append(_result("softmax_rows_sum_to_one", sums < 1e-6, f"max|sum-1|={sums:.2e}"))
    shifted = tensor.softmax_lastdim(rows + 1000.0)
    drift = np.abs(shifted - sm).max()
    out.append(_result("softmax_shift_invariant", drift < 1e-6, f"max drift={drift:.2e}"))

    stats = tensor.reduce_stats(x, "sample", eps=1e-5)
    z = ((x - stats.mean) / stats.std).astype(np.float32)
    zs = tensor.reduce_stats(z, "sample", eps=1e-12)
    m = np.abs(zs.mean).max()
    s = np.abs(zs.std - 1.0).max()
    out.append(_result("normalized_stats_roundtrip", m < 1e-6 and s < 1e-5,
                       f"|mean|={m:.2e} |std-1|={s:.2e}"))

    sym_ker = rng.standard_normal((3, 3, 2, 2)).astype(np.float32)
    sym_ker = (sym_ker + sym_ker[:, ::-1]) / 2  # symmetric in the w axis
    y = tensor.conv2d(x[:, :, :, :2], sym_ker, pad_mode="reflect")
    y_m = tensor.conv2d(x[:, :, ::-1, :2], sym_ker, pad_mode="reflect")
    out.append(_result("conv2d_reflect_mirror_symmetry",
                       np.allclose(y[:, :, ::-1], y_m, atol=1e-6)))
    return out


def suite_activations(seed: int = 0) -> list:
    out = []
    grid = np.linspace(-3.0, 3.0, 601)

    sr0 = act.soft_relu(0.0)
    out.append(_result("softrelu_alpha0_equals_relu",
                       np.array_equal(sr0.apply(grid), act.relu().apply(grid))))

    sr = act.soft_relu(0.1)
    vals = sr.apply(grid)
    out.append(_result("softrelu_monotone", bool(np.all(np.diff(vals) >= 0))))
    # asymptotes of the exact formula: x - alpha/2 upward, -alpha/2 downward
    a = 0.1
    tail = max(abs(float(sr.apply(np.float64(10.0))) - (10.0 - a / 2)),
               abs(float(sr.apply(np.float64(-10.0))) + a / 2))
    out.append(_result("softrelu_asymptotes", tail < a * a / 20,
                       f"tail residue={tail:.2e}"))

    for kind, a in (("soft_relu", sr), ("gelu", act.gelu())):
        err = metrics.fd_check(a.apply, a.derivative, grid, step=1e-3)
        out.append(_result(f"{kind}_derivative_fd", err < 1e-5, f"max err={err:.2e}"))

    g = act.gelu().apply(grid)
    neg = grid < 0
    out.append(_result("gelu_non_monotone_below_zero",
                       bool(np.any(np.diff(g[neg]) < 0))))
    return out


def suite_norm(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    x = rng.standard_normal((2, 4, 5, 6)).astype(np.float32)
    p = norm.NormParams.identity(6)

    # tokens differing by a shared offset collapse to the same output
    t1 = tensor.tensor(rng.standard_normal((1, 1, 1, 6)).astype(np.float32))
    t2 = (t1 + 3.5).astype(np.float32)
    both = np.concatenate([t1, t2], axis=1)
    y = norm.layernorm_token(both, p)
    gap = np.abs(y[0, 0] - y[0, 1]).max()
    out.append(_result("token_norm_drops_shared_offset", gap < 1e-5, f"gap={gap:.2e}"))

    y, _ = norm.layernorm_sample(x, p)
    st = tensor.reduce_stats(y, "sample", eps=1e-12)
    out.append(_result("sample_norm_unit_stats",
                       np.abs(st.mean).max() < 1e-6 and np.abs(st.std - 1).max() < 1e-5))
    out.append(_result("sample_norm_keeps_argmax",
                       int(np.argmax(y[0])) == int(np.argmax(x[0]))))

    w = norm.RescaleWeights.init(6)
    yb, pair = norm.rescalenorm_begin(x, p, w)
    ye = norm.rescalenorm_end(yb, pair)
    out.append(_result("rescale_init_degenerates", np.array_equal(yb, ye)))

    w_full = norm.RescaleWeights(np.ones(6, np.float32), np.zeros(6, np.float32),
                                 np.ones(6, np.float32), np.zeros(6, np.float32))
    yb, pair = norm.rescalenorm_begin(x, p, w_full)
    recon = norm.rescalenorm_end(yb, pair)
    err = np.abs(recon - x).max()
    out.append(_result("rescale_roundtrip_reconstructs", err < 1e-5, f"max err={err:.2e}"))
    return out


def _interior_pairs(h, w, ws, s):
    """(padded-grid flat index, cyclic flat index) of fully interior windows.

    A padded-scheme window starting at original row r0 = ri*ws - s matches
    the cyclic window starting at rolled row r0 - s (cyclic windows hold
    original rows [ci*ws + s, ci*ws + s + ws)).
    """
    ref_grid = ((h + s + (ws - (h + s) % ws) % ws) // ws,
                (w + s + (ws - (w + s) % ws) % ws) // ws)
    cyc_grid = (h // ws, w // ws)
    pairs = []
    for ri in range(ref_grid[0]):
        for rj in range(ref_grid[1]):
            r0, c0 = ri * ws - s, rj * ws - s  # original coordinates
            if not (0 <= r0 and r0 + ws <= h and 0 <= c0 and c0 + ws <= w):
                continue
            if (r0 - s) % ws or (c0 - s) % ws:
                continue
            ci, cj = (r0 - s) // ws, (c0 - s) // ws
            if 0 <= ci < cyc_grid[0] and 0 <= cj < cyc_grid[1]:
                pairs.append((ri * ref_grid[1] + rj, ci * cyc_grid[1] + cj))
    return pairs


def suite_attention(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    ws, s = 8, 4

    for scheme in attn.Scheme:
        x = rng.standard_normal((2, 16, 16, 3)).astype(np.float32)
        layout = attn.WindowLayout(ws, s, scheme)
        wins, _ = attn.partition(x, layout)
        back = attn.reverse(wins, layout, (16, 16))
        out.append(_result(f"roundtrip_{scheme.value}", np.array_equal(back, x)))

    x = rng.standard_normal((1, 12, 20, 3)).astype(np.float32)
    layout = attn.WindowLayout(ws, s, attn.Scheme.REFLECTION_PAD)
    wins, mask = attn.partition(x, layout)
    back = attn.reverse(wins, layout, (12, 20))
    out.append(_result("roundtrip_reflection_nondivisible",
                       np.array_equal(back, x) and mask is None))
    out.append(_result("reflection_windows_all_real",
                       wins.shape[1] == ws * ws and mask is None,
                       f"{wins.shape[0]} windows x {wins.shape[1]} tokens"))

    c, heads = 6, 2
    params = attn.AttentionParams(
        v_w=np.eye(c, dtype=np.float32), v_b=np.zeros(c, np.float32),
        proj_w=np.eye(c, dtype=np.float32), proj_b=np.zeros(c, np.float32),
        heads=heads,
        qk_w=np.zeros((c, 2 * c), np.float32), qk_b=np.zeros(2 * c, np.float32))
    bias = attn.RelPosBias.zeros(4, heads)
    windows = rng.standard_normal((3, 16, c)).astype(np.float32)
    uniform = attn.wmhsa(windows, params, bias)
    expect = np.repeat(windows.mean(axis=1, keepdims=True), 16, axis=1)
    err = np.abs(uniform - expect).max()
    out.append(_result("zero_query_uniform_average", err < 1e-6, f"max err={err:.2e}"))

    qkv_w = network.trunc_normal(np.random.default_rng(5), (c, 3 * c), 0.5)
    params2 = attn.AttentionParams(
        v_w=qkv_w[:, 2 * c:], v_b=np.zeros(c, np.float32),
        proj_w=network.trunc_normal(np.random.default_rng(6), (c, c), 0.5),
        proj_b=np.zeros(c, np.float32), heads=heads,
        qk_w=qkv_w[:, :2 * c], qk_b=np.zeros(2 * c, np.float32))
    bias2 = attn.RelPosBias.seeded(4, heads, np.random.default_rng(7))
    got = attn.wmhsa(windows, params2, bias2)
    ref = _wmhsa_loops(windows, params2, bias2)
    err = np.abs(got - ref).max()
    out.append(_result("wmhsa_matches_loop_oracle", err < 1e-5, f"max err={err:.2e}"))

    x = rng.standard_normal((1, 16, 16, c)).astype(np.float32)
    pairs = _interior_pairs(16, 16, ws, s)
    ref_layout = attn.WindowLayout(ws, s, attn.Scheme.REFLECTION_PAD)
    cyc_layout = attn.WindowLayout(ws, s, attn.Scheme.CYCLIC_SHIFT_MASKED)
    zp_layout = attn.WindowLayout(ws, s, attn.Scheme.ZERO_PAD_MASKED)
    bias8 = attn.RelPosBias.seeded(ws, heads, np.random.default_rng(8))
    rw, _ = attn.partition(x, ref_layout)
    cw, cm = attn.partition(x, cyc_layout)
    zw, zm = attn.partition(x, zp_layout)
    ro = attn.wmhsa(rw, params2, bias8)
    co = attn.wmhsa(cw, params2, bias8, cm)
    zo = attn.wmhsa(zw, params2, bias8, zm)
    worst = 0.0
    ok = len(pairs) > 0
    for ri, ci in pairs:
        worst = max(worst, float(np.abs(ro[ri] - co[ci]).max()))
    out.append(_result("interior_reflection_vs_cyclic", ok and worst < 1e-5,
                       f"{len(pairs)} windows, max err={worst:.2e}"))
    worst = max(float(np.abs(zo[ri] - co[ci]).max())
                for ri, ci in pairs)
    out.append(_result("interior_zeropad_vs_cyclic", worst < 1e-5,
                       f"max err={worst:.2e}"))
    return out


def _wmhsa_loops(windows, params, bias):
    """Brute-force attention over every (query, key) pair, float64."""
    n, tokens, c = windows.shape
    heads, d = params.heads, c // params.heads
    qkv = windows.astype(np.float64) @ params.qkv_w.astype(np.float64)
    qkv += params.qkv_b.astype(np.float64)
    bmat = bias.matrix().astype(np.float64)
    out = np.zeros((n, tokens, c))
    for wi in range(n):
        for h in range(heads):
            q = qkv[wi, :, h * d:(h + 1) * d]
            k = qkv[wi, :, c + h * d:c + (h + 1) * d]
            v = qkv[wi, :, 2 * c + h * d:2 * c + (h + 1) * d]
            for i in range(tokens):
                logits = np.array([q[i] @ k[j] / np.sqrt(d) + bmat[h, i, j]
                                   for j in range(tokens)])
                e = np.exp(logits - logits.max())
                w = e / e.sum()
                out[wi, i, h * d:(h + 1) * d] = sum(w[j] * v[j]
                                                    for j in range(tokens))
    return (out @ params.proj_w.astype(np.float64)
            + params.proj_b.astype(np.float64)).astype(np.float32)


def suite_network(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []

    for name in network.VARIANTS:
        spec, store = network.build(name, seed=seed)
        out.append(_result(f"params_match_store_{name}",
                           network.count_params(spec) == store.total_params(),
                           f"{store.total_params()}"))

    spec, store = network.build("T", seed=seed)
    x = rng.random((1, 32, 32, 3), dtype=np.float32)
    y1 = network.forward(spec, store, x)
    y2 = network.forward(spec, store, x)
    out.append(_result("forward_deterministic", np.array_equal(y1, y2)))
    out.append(_result("forward_finite_shape",
                       y1.shape == x.shape and bool(np.all(np.isfinite(y1)))))

    zero = network.build("T", seed=seed)[1]
    zero._arrays["head.k"] = np.zeros_like(zero["head.k"])
    zero._arrays["head.b"] = np.zeros_like(zero["head.b"])
    out.append(_result("zero_head_identity",
                       np.array_equal(network.forward(spec, zero, x), x)))

    c1, c2 = 6, 4
    p = network.SKFusionParams(
        f_w=network.trunc_normal(rng, (c1, c2), 0.3), f_b=np.zeros(c2, np.float32),
        mlp_w1=network.trunc_normal(rng, (c2, 2), 0.3), mlp_b1=np.zeros(2, np.float32),
        mlp_w2=network.trunc_normal(rng, (2, 2 * c2), 0.3),
        mlp_b2=np.zeros(2 * c2, np.float32))
    x1 = rng.standard_normal((2, 5, 5, c1)).astype(np.float32)
    x2 = rng.standard_normal((2, 5, 5, c2)).astype(np.float32)
    x1h = tensor.linear(x1, p.f_w, p.f_b)
    pooled = (x1h.astype(np.float64) + x2).mean(axis=(1, 2)).astype(np.float32)
    hidden = np.maximum(pooled @ p.mlp_w1 + p.mlp_b1, 0)
    logits = (hidden @ p.mlp_w2 + p.mlp_b2).reshape(2, 2, c2)
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    a = e / e.sum(axis=1, keepdims=True)
    out.append(_result("sk_weights_sum_to_one",
                       np.abs(a.sum(axis=1) - 1).max() < 1e-6))
    return out


def suite_hazegen(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []

    grid = np.arange(0.0, 1.0 + 1e-9, 1e-3)
    g = hazegen.gamma_map(grid)
    out.append(_result("gamma_monotone_nonincreasing",
                       bool(np.all(np.diff(g) <= 1e-7))))
    vals = hazegen.gamma_map(np.array([0.0, 0.25, 1.0]))
    out.append(_result("gamma_anchor_values",
                       abs(vals[0] - 4.0) < 1e-6 and abs(vals[1] - 1.910578) < 1e-4
                       and abs(vals[2] - 0.0) < 1e-6,
                       f"{vals.tolist()}"))

    rho = rng.random((32, 32))
    t_lo = hazegen.transmission_ref(rho, 0.3)
    t_hi = hazegen.transmission_ref(rho, 0.6)
    out.append(_result("denser_haze_lower_t1",
                       bool(np.all(t_hi[rho > 0] < t_lo[rho > 0]))))

    t1 = np.clip(t_lo, 0.05, 1.0).astype(np.float64)
    gam = hazegen.gamma_map(0.3 * rho).astype(np.float64)
    lam1 = hazegen.LANDSAT8_WAVELENGTHS["B1"]
    t_long = hazegen.transmission_channel(t1, lam1, 2.201, gam)
    out.append(_result("longer_wavelength_higher_t",
                       bool(np.all(t_long >= t1 - 1e-9))))

    img = hazegen.MultiSpectralImage(
        ["B2", "B4"], [rng.random((24, 24)).astype(np.float32) for _ in range(2)],
        [0.482, 0.655])
    p = hazegen.SynthesisParams(omega=0.5)
    atmo = {"B2": 0.9, "B4": 0.85}
    hz = hazegen.synthesize(img, rho[:24, :24], p, atmo)
    in_range = all(float(r.min()) >= 0 and float(r.max()) <= 1 for r in hz.rasters)
    out.append(_result("synthesize_output_in_unit_range", in_range))

    err = _synth_oracle_error(img, rho[:24, :24], p, atmo, hz)
    out.append(_result("synthesize_matches_scalar_oracle", err < 1e-6,
                       f"max err={err:.2e}"))

    p1 = hazegen.SynthesisParams(omega=0.5, xi=1.0)
    hz1 = hazegen.synthesize(img, rho[:24, :24], p1, atmo)
    t1m = hazegen.transmission_ref(rho[:24, :24], 0.5).astype(np.float64)
    gmap = hazegen.gamma_map(0.5 * rho[:24, :24]).astype(np.float64)
    plain_ok = True
    for name, raster, lam, hzr in zip(img.names, img.rasters, img.wavelengths,
                                      hz1.rasters):
        tj = hazegen.transmission_channel(t1m, p1.ref_wavelength, lam, gmap)
        tj = tj.astype(np.float64)
        plain = np.clip(raster.astype(np.float64) * tj
                        + atmo[name] * (1 - tj), 0, 1).astype(np.float32)
        plain_ok = plain_ok and np.array_equal(plain, hzr)
    out.append(_result("xi1_reduces_to_plain_model", plain_ok))

    draws = [hazegen.sample_omega("L", rng) for _ in range(2000)]
    lo, hi = hazegen.DENSITY_RANGES["L"]
    out.append(_result("omega_draws_in_range",
                       all(lo <= w <= hi for w in draws)))
    return out


def _synth_oracle_error(img, rho9, p, atmo, got) -> float:
    import math
    a0, a1, a2, a3 = p.coeffs
    h, w = img.extents
    worst = 0.0
    for ci, (name, raster, lam) in enumerate(zip(img.names, img.rasters,
                                                 img.wavelengths)):
        for i in range(h):
            for j in range(w):
                t1 = 1.0 - p.omega * float(rho9[i, j])
                xg = p.omega * float(rho9[i, j])
                g = a3 * xg ** 3 + a2 * xg ** 2 + a1 * xg + a0
                g = min(max(g, p.gamma_clip[0]), p.gamma_clip[1])
                tj = max(t1, hazegen.T1_FLOOR) ** ((p.ref_wavelength / lam) ** g)
                tp = min(max(1.0 - p.xi * (1.0 - tj), 0.0), 1.0)
                val = float(raster[i, j]) * tp + atmo[name] * (1.0 - tj)
                val = min(max(val, 0.0), 1.0)
                worst = max(worst, abs(val - float(got.rasters[ci][i, j])))
    return worst


SUITES = {
    "tensor": suite_tensor,
    "activations": suite_activations,
    "norm": suite_norm,
    "attention": suite_attention,
    "network": suite_network,
    "hazegen": suite_hazegen,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name == "all":
        results = []
        for key in SUITES:
            results += [(f"{key}.{n}", ok, d) for n, ok, d in SUITES[key](seed)]
        return results
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from "
                         f"{sorted(SUITES) + ['all']}")
    return SUITES[name](seed)
