import math

import numpy as np
import pytest

from notchjam.analysis import welch_psd
from notchjam.coexistence import (
    CommConfig,
    DqpskParams,
    JammerConfig,
    RadarConfig,
    ScenarioConfig,
    build_jammers,
    chirp_pulse,
    dqpsk_demodulate,
    dqpsk_modulate,
    dqpsk_symbols,
    estimate_sinr,
    matched_filter_integrate,
    rrc_taps,
    run_scenario,
)


class TestRrc:
    def test_unit_energy_symmetric(self):
        h = rrc_taps(0.25, 50, 32)
        assert np.linalg.norm(h) == pytest.approx(1.0)
        np.testing.assert_allclose(h, h[::-1], atol=1e-15)
        assert h.size == 32 * 50 + 1

    def test_nyquist_after_matched_filter(self):
        # RRC * RRC is a raised cosine: zero at every nonzero symbol instant
        sps = 50
        h = rrc_taps(0.25, sps, 32)
        rc = np.convolve(h, h)
        mid = rc.size // 2
        at_symbols = rc[mid % sps :: sps]
        peak = np.argmax(np.abs(at_symbols))
        others = np.delete(at_symbols, peak)
        assert np.max(np.abs(others)) < 1e-3 * at_symbols[peak]

    def test_special_point_continuous(self):
        # t = 1 / (4 beta) uses the limit formula; neighbours must agree
        h = rrc_taps(0.25, 100, 8)
        t = np.arange(h.size) - h.size // 2
        i = np.flatnonzero(t == 100)[0]
        assert abs(h[i] - 0.5 * (h[i - 1] + h[i + 1])) < 1e-4

    def test_bad_rolloff(self):
        with pytest.raises(ValueError):
            rrc_taps(0.0, 10, 4)


class TestDqpsk:
    def test_zero_pairs_advance_pi_over_4(self):
        s = dqpsk_symbols([0, 0] * 5)
        np.testing.assert_allclose(np.angle(s[1:] * np.conj(s[:-1])), np.pi / 4)

    def test_gray_mapping(self):
        s = dqpsk_symbols([0, 0, 0, 1, 1, 0, 1, 1])
        steps = np.angle(s[1:] * np.conj(s[:-1]))
        np.testing.assert_allclose(steps, [np.pi / 4, 3 * np.pi / 4, -np.pi / 4, -3 * np.pi / 4])

    def test_odd_bits(self):
        with pytest.raises(ValueError):
            dqpsk_symbols([0, 1, 1])

    def test_occupied_bandwidth(self):
        p = DqpskParams()
        assert p.occupied_bandwidth == pytest.approx(500e3)
        with pytest.raises(ValueError):
            dqpsk_modulate([0, 0], DqpskParams(rolloff=0.5))

    def test_spectrum_at_offset(self):
        bits = np.random.default_rng(0).integers(0, 2, 2000)
        x = dqpsk_modulate(bits)
        psd = welch_psd(x, 1000, normalize="absolute", sample_rate=20e6)
        inside = np.abs(psd.frequencies_hz - 8.5e6) <= 250e3
        far = np.abs(psd.frequencies_hz - 8.5e6) > 500e3
        assert 10 * np.log10(psd.power[inside].mean() / psd.power[far].mean()) > 40

    @pytest.mark.parametrize("seed", range(3))
    def test_clean_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, 368)
        x = dqpsk_modulate(bits)
        rx = np.concatenate([np.zeros(137), x, np.zeros(300)])
        res = dqpsk_demodulate(rx, 368, start=137)
        assert res.sync_ok
        np.testing.assert_array_equal(res.bits, bits)
        assert res.scatter.shape == (184, 2)
        np.testing.assert_allclose(np.hypot(*res.scatter.T), 1.0)

    def test_sync_failure_flagged(self):
        x = dqpsk_modulate(np.zeros(20, dtype=int))
        res = dqpsk_demodulate(x[:100], 20, start=0)
        assert not res.sync_ok


class TestRadar:
    def test_chirp_unit_energy_and_sweep(self):
        p = chirp_pulse(2e6, 50e-6, 20e6, 2e6)
        assert p.size == 1000
        assert np.linalg.norm(p) == pytest.approx(1.0)
        inst = np.diff(np.unwrap(np.angle(p))) * 20e6 / (2 * np.pi)
        assert inst[0] == pytest.approx(1e6, rel=1e-3) and inst[-1] == pytest.approx(3e6, rel=1e-3)
        np.testing.assert_allclose(np.diff(inst), np.diff(inst)[0], rtol=1e-6)

    def test_compression_peak_and_width(self):
        p = chirp_pulse(2e6, 50e-6, 20e6)
        rx = np.zeros(4000, complex)
        rx[700 : 700 + p.size] = p
        y = matched_filter_integrate(rx, p, 4000, [1])[1]
        assert np.argmax(np.abs(y)) == 700
        assert np.abs(y[700]) == pytest.approx(1.0)
        # -4 dB mainlobe about 1 / bandwidth = 10 samples wide
        above = np.flatnonzero(np.abs(y) ** 2 > 10 ** -0.4)
        assert 5 <= above.size <= 15

    def test_matched_filter_gain(self):
        rng = np.random.default_rng(0)
        p = chirp_pulse(2e6, 50e-6, 20e6)
        noise = (rng.standard_normal(200000) + 1j * rng.standard_normal(200000)) / math.sqrt(2)
        y = matched_filter_integrate(noise, p, 2000, [1])[1]
        # unit-energy replica keeps white noise power, the pulse peaks at 1
        assert np.mean(np.abs(y) ** 2) == pytest.approx(1.0, rel=0.15)

    def test_coherent_integration_gain(self):
        rng = np.random.default_rng(1)
        p = chirp_pulse(2e6, 50e-6, 20e6)
        pri, m = 2000, 20
        radar = np.zeros(pri * m, complex)
        for k in range(m):
            radar[k * pri + 100 : k * pri + 100 + p.size] = 10 * p
        noise = (rng.standard_normal(pri * m) + 1j * rng.standard_normal(pri * m)) / math.sqrt(2)
        yr = matched_filter_integrate(radar, p, pri, [1, m])
        yn = matched_filter_integrate(noise, p, pri, [1, m])
        gain = estimate_sinr(yr[m], yn[m]) - estimate_sinr(yr[1], yn[1])
        assert gain == pytest.approx(10 * math.log10(m), abs=1.0)

    def test_sinr_edge_cases(self):
        with pytest.raises(ValueError):
            estimate_sinr(np.ones(3), np.array([]))
        assert estimate_sinr(np.ones(3), np.zeros(3)) == math.inf
        noise = np.random.default_rng(2).standard_normal(1000)
        assert math.isfinite(estimate_sinr(noise, noise))

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            matched_filter_integrate(np.ones(10), np.ones(2), 4, [3])


def small_config(**kw):
    radar = RadarConfig(pulses=(1, 2))
    jammer = JammerConfig(types=("none", "reference", "proj"))
    return ScenarioConfig(radar=radar, jammer=jammer, trials=3, **kw)


@pytest.fixture(scope="module")
def jammers():
    return build_jammers(small_config())


class TestScenario:
    def test_config_geometry(self):
        cfg = ScenarioConfig()
        assert cfg.pri_samples == 10000 and cfg.capture_length == 300000
        assert cfg.jammer_length == 400000
        assert cfg.comm_protected()
        assert len(cfg.stop_bands()) == 3

    def test_config_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ScenarioConfig(jammer=JammerConfig(types=("laser",)))
        with pytest.raises(ValueError):
            ScenarioConfig(comm=CommConfig(offset=9.9e6))
        with pytest.raises(ValueError):
            ScenarioConfig.from_dict({"radar": {"colour": 1}})

    def test_dict_roundtrip(self):
        cfg = small_config(seed=4)
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg

    def test_pattern_and_determinism(self, jammers):
        cfg = small_config()
        a = run_scenario(cfg, jammers)
        b = run_scenario(cfg, jammers, threads=3)
        assert a.error_rate_pct == b.error_rate_pct
        assert a.sinr_db == b.sinr_db
        assert a.error_rate_pct["none"] == 0 and a.error_rate_pct["proj"] == 0
        assert a.error_rate_pct["reference"] > 30
        drop = a.sinr_db["none"][1] - a.sinr_db["reference"][1]
        assert 50 < drop < 65
        assert abs(a.sinr_db["proj"][1] - a.sinr_db["reference"][1]) < 1
        types, rows = a.table_rows()
        assert types == ["none", "reference", "proj"] and len(rows) == 3

    def test_vanishing_jammer_recovers_clean_sinr(self, jammers):
        loud = run_scenario(small_config(), jammers)
        quiet_cfg = small_config()
        quiet_cfg.jammer.jnr_db = -80
        quiet = run_scenario(quiet_cfg, jammers)
        for m in (1, 2):
            assert quiet.sinr_db["reference"][m] == pytest.approx(loud.sinr_db["none"][m], abs=0.05)

    def test_short_jammer_recorded_not_fatal(self):
        cfg = small_config()
        jammers = {"reference": np.ones(10, complex), "proj": np.ones(10, complex)}
        rep = run_scenario(cfg, jammers)
        assert rep.failed_snapshots["reference"] == 3
