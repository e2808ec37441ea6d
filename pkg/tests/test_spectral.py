import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from notchjam.spectral import (
    BandOperator,
    FrequencyGrid,
    StopBand,
    band_energy,
    band_grid_indices,
    bands_from_hz,
    check_constraints,
    depth_to_energy,
    energy_to_depth,
    steering_vector,
    union_indices,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def complex_arrays(min_size=1, max_size=64):
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite))
    ).map(lambda t: t[0] + 1j * t[1])


def dense_dft(n):
    """Explicit DFT matrix, rows indexed by frequency."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


class TestDepthConversion:
    def test_known_values(self):
        assert depth_to_energy(60) == pytest.approx(1e-6, rel=1e-15)
        assert depth_to_energy(10) == pytest.approx(0.1, rel=1e-15)
        assert depth_to_energy(None) == 0.0
        assert depth_to_energy(math.inf) == 0.0
        assert energy_to_depth(1e-8) == pytest.approx(80.0)
        assert energy_to_depth(0.0) == math.inf

    @given(st.floats(-50, 250))
    def test_round_trip(self, d):
        assert energy_to_depth(depth_to_energy(d)) == pytest.approx(d, abs=1e-9)


class TestStopBand:
    @pytest.mark.parametrize("lo,hi", [(0.5, 0.5), (0.6, 0.2), (-0.1, 0.2), (0.2, 1.1), (1.0, 1.0)])
    def test_rejects_bad_edges(self, lo, hi):
        with pytest.raises(ValueError):
            StopBand(lo, hi, 0.0)

    def test_rejects_negative_energy(self):
        with pytest.raises(ValueError):
            StopBand(0.1, 0.2, -1e-3)

    def test_from_depth(self):
        b = StopBand.from_depth(0.1, 0.3, 30)
        assert b.max_energy == pytest.approx(1e-3)
        assert b.width == pytest.approx(0.2)
        assert b.depth_db == pytest.approx(30)


class TestBandsFromHz:
    def test_negative_band_wraps(self):
        (b,) = bands_from_hz(-4e6, -2e6, 20e6, 60)
        assert b.f_lo == pytest.approx(0.8)
        assert b.f_hi == pytest.approx(0.9)
        assert b.max_energy == pytest.approx(1e-6)

    def test_positive_band(self):
        (b,) = bands_from_hz(8e6, 9e6, 20e6)
        assert (b.f_lo, b.f_hi, b.max_energy) == pytest.approx((0.4, 0.45, 0.0))

    def test_band_across_dc_splits(self):
        bands = bands_from_hz(-1e6, 2e6, 20e6, 20)
        assert len(bands) == 2
        assert bands[0].f_lo == pytest.approx(0.95) and bands[0].f_hi == 1.0
        assert bands[1].f_lo == 0.0 and bands[1].f_hi == pytest.approx(0.1)

    def test_band_edge_at_nyquist(self):
        (b,) = bands_from_hz(-10e6, -6e6, 20e6, 10)
        assert b.f_lo == pytest.approx(0.5) and b.f_hi == pytest.approx(0.7)

    @pytest.mark.parametrize("lo,hi", [(-11e6, -6e6), (2e6, 10.5e6), (3e6, 2e6)])
    def test_rejects_out_of_range(self, lo, hi):
        with pytest.raises(ValueError):
            bands_from_hz(lo, hi, 20e6)


class TestGridAndSteering:
    def test_grid(self):
        g = FrequencyGrid(8)
        assert g.spacing * g.n_points == 1.0
        np.testing.assert_array_equal(g.frequencies, np.arange(8) / 8)
        assert np.all(np.diff(g.frequencies) > 0)

    def test_steering_vector_quarter_tone(self):
        # tone at +f: samples advance by +j per step
        np.testing.assert_allclose(steering_vector(0.25, 4), 0.5 * np.array([1, 1j, -1, -1j]), atol=1e-15)

    @given(st.floats(0, 0.999999), st.integers(1, 300))
    def test_unit_norm(self, f, n):
        assert np.linalg.norm(steering_vector(f, n)) == pytest.approx(1.0, abs=1e-12)

    def test_matches_dft_columns(self):
        # c^H p_f equals the conjugated DFT bin / sqrt(n)
        rng = np.random.default_rng(0)
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        dft = dense_dft(8) @ c
        for k in range(8):
            p = steering_vector(k / 8, 8)
            assert np.vdot(p, c) == pytest.approx(dft[k] / np.sqrt(8), abs=1e-12)

    def test_rejects_bad_frequency(self):
        with pytest.raises(ValueError):
            steering_vector(1.0, 4)


class TestGridIndices:
    def test_closed_interval_with_snapping(self):
        # 0.8 * 1000 and 0.9 * 1000 are not exact in binary; both edges count
        idx = band_grid_indices(StopBand(0.8, 0.9), 1000)
        assert idx[0] == 800 and idx[-1] == 900 and idx.size == 101

    def test_upper_edge_one_wraps_to_dc(self):
        idx = band_grid_indices(StopBand(0.75, 1.0), 8)
        np.testing.assert_array_equal(idx, [0, 6, 7])

    def test_empty_band_raises(self):
        with pytest.raises(ValueError):
            band_grid_indices(StopBand(0.51, 0.52), 8)

    def test_union(self):
        idx = union_indices([StopBand(0.1, 0.3), StopBand(0.25, 0.5)], 8)
        np.testing.assert_array_equal(idx, [1, 2, 3, 4])
        assert union_indices([], 8).size == 0


class TestBandOperator:
    def test_columns_orthonormal(self):
        op = BandOperator(StopBand(0.2, 0.45), 64)
        q = op.columns()
        np.testing.assert_allclose(q.conj().T @ q, np.eye(op.n_cols), atol=1e-12)

    def test_energy_against_dense_oracle(self):
        # 8-point instance: c^H R c with R = Q Q^H / width built explicitly
        rng = np.random.default_rng(3)
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        band = StopBand(0.25, 0.5, 1.0)
        cols = np.column_stack([steering_vector(k / 8, 8) for k in (2, 3, 4)])
        r = cols @ cols.conj().T / band.width
        expected = float(np.vdot(c, r @ c).real)
        op = BandOperator(band, 8)
        assert op.energy(c) == pytest.approx(expected, rel=1e-12)
        assert band_energy(c, op) == pytest.approx(expected, rel=1e-12)

    def test_ramp_closed_form(self):
        # c(m) = m + 1 has |X_k|^2 = N^2 / (4 sin^2(pi k / N)) for k != 0
        n = 8
        c = np.arange(1, n + 1).astype(complex)
        op = BandOperator(StopBand(0.25, 0.5), n)
        expected = sum(n**2 / (4 * math.sin(math.pi * k / n) ** 2) for k in (2, 3, 4)) / n / 0.25
        assert op.energy(c) == pytest.approx(expected, rel=1e-12)
        assert op.energy(c) == pytest.approx(33.37258300203048, rel=1e-12)

    @given(complex_arrays(4, 64), st.floats(0, 0.8), st.floats(0.05, 0.2))
    def test_quadratic_form_nonnegative(self, c, lo, width):
        band = StopBand(lo, lo + width)
        try:
            op = BandOperator(band, c.size)
        except ValueError:
            return
        assert op.energy(c) >= 0.0


class TestCheckConstraints:
    def test_flat_reference_has_unit_band_energy(self):
        # a unit-energy constant-modulus sequence has band energy ~ 1
        n = 4096
        c = np.exp(2j * np.pi * np.random.default_rng(1).random(n)) / np.sqrt(n)
        (chk,) = check_constraints(c, [StopBand(0.2, 0.3, 1.0)])
        assert chk.energy == pytest.approx(1.0, rel=0.2)

    def test_feasibility_flags(self):
        c = np.ones(16) / 4
        dc, other = check_constraints(c, [StopBand(0.0, 0.05, 0.0), StopBand(0.3, 0.4, 0.0)])
        assert not dc.feasible()
        assert other.feasible()
        assert other.slack == pytest.approx(0.0, abs=1e-25)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            check_constraints(np.ones(8), [StopBand(0.1, 0.4)], grid=16)
