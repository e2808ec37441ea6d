import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from notchjam.projection import generate_reference, project_notch
from notchjam.quantization import (
    UniformQuantizer,
    full_scale_normalize,
    notch_degradation,
    quantization_report,
    quantize,
    step_size,
    theory_variance,
)
from notchjam.spectral import StopBand

# published theory column, four significant digits
THEORY = {8: 5.0863e-6, 10: 3.1789e-7, 12: 1.9868e-8, 14: 1.2418e-9, 16: 7.7610e-11}


class TestLevels:
    def test_one_bit(self):
        q = quantize(np.array([-0.9 + 0.2j, 0.0 - 1.0j, 1.0 + 0.7j]), 1)
        np.testing.assert_array_equal(q, [-0.5 + 0.5j, 0.5 - 0.5j, 0.5 + 0.5j])

    def test_levels_unchanged(self):
        d = step_size(4)
        levels = -1 + d / 2 + d * np.arange(16)
        c = levels + 1j * levels[::-1]
        np.testing.assert_array_equal(quantize(c, 4), c)

    def test_step(self):
        assert step_size(8) == 2 / 256

    @pytest.mark.parametrize("bits", sorted(THEORY))
    def test_theory_matches_published(self, bits):
        assert float(f"{theory_variance(bits):.4e}") == THEORY[bits]

    @given(st.integers(1, 20), st.integers(0, 2**31 - 1))
    def test_error_bounded_by_half_step(self, bits, seed):
        rng = np.random.default_rng(seed)
        c = rng.uniform(-1, 1, 500) + 1j * rng.uniform(-1, 1, 500)
        err = c - quantize(c, bits)
        half = step_size(bits) / 2
        assert np.all(np.abs(err.real) <= half + 1e-15)
        assert np.all(np.abs(err.imag) <= half + 1e-15)

    def test_eight_bit_exhaustive(self):
        rng = np.random.default_rng(0)
        c = rng.uniform(-1, 1, 100000) + 1j * rng.uniform(-1, 1, 100000)
        r = quantization_report(c, 8)
        assert r.max_abs_error <= 3.90625e-3

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            quantize(np.array([1.01 + 0j]), 8)
        with pytest.raises(ValueError):
            quantize(np.array([0.5]), 0)
        with pytest.raises(ValueError):
            quantize(np.array([0.5]), 60)


class TestFullScale:
    def test_constant_modulus(self):
        c = generate_reference(1000, 0)
        s, scale = full_scale_normalize(c)
        assert max(np.abs(s.real).max(), np.abs(s.imag).max()) == pytest.approx(1.0)
        np.testing.assert_allclose(s / scale, c, rtol=1e-15)

    def test_already_full_scale(self):
        _, scale = full_scale_normalize(np.array([1.0, -0.5j]))
        assert scale == 1.0

    def test_zero(self):
        with pytest.raises(ValueError):
            full_scale_normalize(np.zeros(4))


class TestReport:
    @pytest.mark.parametrize("bits", sorted(THEORY))
    def test_variance_and_energy(self, bits):
        c, _ = full_scale_normalize(generate_reference(100000, 1))
        r = quantization_report(c, bits)
        assert abs(r.est_variance_re / r.theory_variance - 1) < 0.05
        assert abs(r.energy_diff / (2 * 100000 * r.theory_variance) - 1) < 0.10
        assert r.histogram_counts.sum() == 100000

    def test_histogram_roughly_uniform(self):
        c, _ = full_scale_normalize(generate_reference(100000, 2))
        r = quantization_report(c, 12, n_bins=20)
        assert r.histogram_counts.min() > 0.85 * 5000 and r.histogram_counts.max() < 1.15 * 5000


def test_notch_degradation_monotone():
    bands = [StopBand(0.8, 0.9), StopBand(0.2, 0.25), StopBand(0.4, 0.45)]
    c = project_notch(generate_reference(20000, 3), bands)
    out = notch_degradation(c, bands, [8, 12, 16])
    mins = [min(d.mean_db for d in out[b]) for b in (8, 12, 16)]
    assert mins[0] < mins[1] < mins[2]
    assert min(d.mean_db for d in out[None]) > mins[2]


class TestUniformQuantizer:
    def test_roundtrip_scale(self):
        X = generate_reference(256, 0)
        est = UniformQuantizer(bits=16).fit(X)
        Y = est.transform(X)
        assert max(np.abs(Y.real).max(), np.abs(Y.imag).max()) <= 1
        np.testing.assert_allclose(est.inverse_transform(Y), X, atol=step_size(16) / est.scale_)

    def test_params_clone(self):
        est = UniformQuantizer(bits=10, normalize=False)
        assert clone(est).get_params() == {"bits": 10, "normalize": False}

    def test_no_normalize(self):
        est = UniformQuantizer(bits=4, normalize=False).fit(np.array([0.1 + 0.1j]))
        assert est.scale_ == 1.0
