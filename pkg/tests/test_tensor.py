"""Tensor core: convolution, projection, softmax, statistics, file I/O."""

import math

import numpy as np
import pytest

from dehaze import tensor as T


def conv_loop_oracle(x, kernel, bias, groups, stride, pad_mode):
    """Scalar-loop cross-correlation in float64."""
    b, h, w, cin = x.shape
    k, _, cin_g, cout = kernel.shape
    pad = k // 2
    mode = "constant" if pad_mode == "zero" else "reflect"
    xp = np.pad(x.astype(np.float64),
                ((0, 0), (pad, pad), (pad, pad), (0, 0)), mode=mode)
    ho = (xp.shape[1] - k) // stride + 1
    wo = (xp.shape[2] - k) // stride + 1
    cout_g = cout // groups
    out = np.zeros((b, ho, wo, cout))
    for bi in range(b):
        for oi in range(ho):
            for oj in range(wo):
                for g in range(groups):
                    for oc in range(cout_g):
                        acc = 0.0
                        for ki in range(k):
                            for kj in range(k):
                                for ic in range(cin_g):
                                    acc += (xp[bi, oi * stride + ki,
                                               oj * stride + kj,
                                               g * cin_g + ic]
                                            * kernel[ki, kj, ic,
                                                     g * cout_g + oc])
                        out[bi, oi, oj, g * cout_g + oc] = acc
    if bias is not None:
        out += bias
    return out


class TestConv2d:
    def test_identity_kernel(self):
        x = np.ones((1, 3, 3, 1), np.float32)
        ker = np.zeros((3, 3, 1, 1), np.float32)
        ker[1, 1, 0, 0] = 1.0
        assert np.array_equal(T.conv2d(x, ker, pad_mode="zero"), x)

    def test_scalar_affine(self):
        x = T.tensor([[[[2.0]]]])
        ker = np.full((1, 1, 1, 1), 3.0, np.float32)
        out = T.conv2d(x, ker, bias=np.array([1.0], np.float32))
        assert out[0, 0, 0, 0] == pytest.approx(7.0)

    def test_ramp_reflect_matches_loop(self):
        x = np.arange(16, dtype=np.float32).reshape(1, 4, 4, 1)
        ker = np.ones((3, 3, 1, 1), np.float32)
        got = T.conv2d(x, ker, pad_mode="reflect")
        want = conv_loop_oracle(x, ker, None, 1, 1, "reflect")
        assert np.abs(got - want).max() < 1e-6

    @pytest.mark.parametrize("groups,stride,pad_mode", [
        (1, 1, "zero"), (1, 2, "reflect"), (3, 1, "reflect"), (6, 1, "zero"),
    ])
    def test_random_matches_loop(self, groups, stride, pad_mode):
        rng = np.random.default_rng(11)
        cin, cout = 6, 6
        x = rng.standard_normal((2, 5, 6, cin)).astype(np.float32)
        ker = rng.standard_normal((3, 3, cin // groups, cout)).astype(np.float32)
        bias = rng.standard_normal(cout).astype(np.float32)
        got = T.conv2d(x, ker, bias, groups=groups, stride=stride,
                       pad_mode=pad_mode)
        want = conv_loop_oracle(x, ker, bias, groups, stride, pad_mode)
        assert got.shape == want.shape
        assert np.abs(got - want).max() < 1e-5

    def test_depthwise_identity_exact(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((1, 7, 5, 4)).astype(np.float32)
        ker = np.zeros((3, 3, 1, 4), np.float32)
        ker[1, 1, 0, :] = 1.0
        assert np.array_equal(T.conv2d(x, ker, groups=4), x)

    def test_stride2_halves(self):
        x = np.zeros((1, 8, 12, 2), np.float32)
        ker = np.zeros((3, 3, 2, 5), np.float32)
        assert T.conv2d(x, ker, stride=2).shape == (1, 4, 6, 5)

    def test_reflect_mirror_symmetry(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((1, 6, 8, 2)).astype(np.float32)
        ker = rng.standard_normal((3, 3, 2, 3)).astype(np.float32)
        ker = (ker + ker[:, ::-1]) / 2
        left = T.conv2d(x, ker, pad_mode="reflect")[:, :, ::-1]
        right = T.conv2d(x[:, :, ::-1], ker, pad_mode="reflect")
        assert np.allclose(left, right, atol=1e-6)

    def test_channel_mismatch_rejected(self):
        x = np.zeros((1, 4, 4, 3), np.float32)
        ker = np.zeros((3, 3, 2, 4), np.float32)
        with pytest.raises(ValueError):
            T.conv2d(x, ker)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            T.conv2d(np.zeros((1, 4, 4, 1), np.float32),
                     np.zeros((2, 2, 1, 1), np.float32))


class TestLinear:
    def test_identity(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((1, 2, 3, 4)).astype(np.float32)
        assert np.array_equal(T.linear(x, np.eye(4, dtype=np.float32)), x)

    def test_hand_arithmetic(self):
        x = T.tensor([[[[1.0, 2.0]]]])
        w = np.array([[1, 0], [0, 2]], np.float32)
        b = np.array([0, 1], np.float32)
        out = T.linear(x, w, b)
        assert out[0, 0, 0].tolist() == [1.0, 5.0]

    def test_matches_dot_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2, 2, 2, 3)).astype(np.float32)
        w = rng.standard_normal((3, 5)).astype(np.float32)
        b = rng.standard_normal(5).astype(np.float32)
        got = T.linear(x, w, b)
        want = np.zeros((2, 2, 2, 5))
        for bi in range(2):
            for i in range(2):
                for j in range(2):
                    for o in range(5):
                        want[bi, i, j, o] = (
                            sum(float(x[bi, i, j, c]) * float(w[c, o])
                                for c in range(3)) + float(b[o]))
        assert np.abs(got - want).max() < 1e-6

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError):
            T.linear(np.zeros((1, 1, 1, 3), np.float32),
                     np.zeros((4, 2), np.float32))


class TestSoftmax:
    def test_uniform_row(self):
        out = T.softmax_lastdim(np.zeros((1, 4)))
        assert np.allclose(out, 0.25)

    def test_closed_form_ratio(self):
        out = T.softmax_lastdim(np.array([0.0, math.log(3.0)]))
        assert np.allclose(out, [0.25, 0.75], atol=1e-9)

    def test_shift_invariance(self):
        rng = np.random.default_rng(5)
        rows = rng.standard_normal((6, 7))
        a = T.softmax_lastdim(rows)
        b = T.softmax_lastdim(rows + 1000.0)
        assert np.abs(a - b).max() < 1e-6

    def test_rows_positive_and_normalized(self):
        rng = np.random.default_rng(6)
        rows = rng.standard_normal((10, 16)).astype(np.float32) * 20
        out = T.softmax_lastdim(rows)
        assert np.all(out > 0)
        assert np.abs(out.sum(-1) - 1).max() < 1e-6


class TestReduceStats:
    def test_constant_tensor(self):
        x = np.full((1, 2, 2, 3), 5.0, np.float32)
        st = T.reduce_stats(x, "sample", eps=1e-5)
        assert st.mean.flat[0] == pytest.approx(5.0)
        assert st.std.flat[0] == pytest.approx(math.sqrt(1e-5))

    def test_two_values(self):
        x = T.tensor([[[[1.0], [3.0]]]])
        st = T.reduce_stats(x, "sample", eps=1e-5)
        assert st.mean.flat[0] == pytest.approx(2.0)
        assert st.std.flat[0] == pytest.approx(math.sqrt(1.0 + 1e-5))

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((2, 3, 4, 5)).astype(np.float32)
        st = T.reduce_stats(x, "channel", eps=1e-5)
        for b in range(2):
            for i in range(3):
                for j in range(4):
                    vals = [float(v) for v in x[b, i, j]]
                    mean = sum(vals) / len(vals)
                    var = sum((v - mean) ** 2 for v in vals) / len(vals)
                    assert abs(st.mean[b, i, j, 0] - mean) < 1e-6
                    assert abs(st.std[b, i, j, 0] - math.sqrt(var + 1e-5)) < 1e-6

    def test_normalized_roundtrip(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((3, 4, 4, 6)).astype(np.float32)
        st = T.reduce_stats(x, "sample", eps=1e-5)
        z = ((x - st.mean) / st.std).astype(np.float32)
        zs = T.reduce_stats(z, "sample", eps=1e-12)
        assert np.abs(zs.mean).max() < 1e-6
        assert np.abs(zs.std - 1.0).max() < 1e-5


class TestDft1:
    def test_roundtrip_bitwise(self, tmp_path):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 3, 5, 7)).astype(np.float32)
        path = tmp_path / "t.dft1"
        T.save_dft1(path, x)
        assert np.array_equal(T.load_dft1(path), x)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.dft1"
        p.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(T.TensorFileError):
            T.load_dft1(p)

    def test_truncated_payload(self, tmp_path):
        x = np.ones((1, 2, 2, 1), np.float32)
        p = tmp_path / "t.dft1"
        T.save_dft1(p, x)
        p.write_bytes(p.read_bytes()[:-4])
        with pytest.raises(T.TensorFileError):
            T.load_dft1(p)
