"""Canned desk-scale reproductions of the reference figures and tables.

Each ``repro_*`` function returns ``{filename: (header, rows)}``;
:func:`run_repro` writes them as CSV. All randomness comes from fixed
seeds so repeated runs give byte-identical files.
"""

from concurrent.futures import ThreadPoolExecutor
import logging
from pathlib import Path

import numpy as np

from .analysis import autocorrelation, mean_psd_level, notch_depth, spectrogram, welch_psd
from .coexistence import ScenarioConfig, run_scenario
from .io import write_csv
from .projection import generate_reference, project_notch
from .quantization import full_scale_normalize, quantization_report, quantize
from .qcqp import design_blockwise
from .spectral import bands_from_hz

__all__ = [
    "SAMPLE_RATE",
    "SCENARIO_BANDS_HZ",
    "EMITTER_CASES",
    "scenario_bands",
    "design_waveforms",
    "band_hz",
    "repro_fig2",
    "repro_fig4",
    "repro_fig5",
    "repro_fig6",
    "repro_table1",
    "repro_table2",
    "repro_table3",
    "repro_fig11",
    "repro_emitters",
    "emitter_bands",
    "REPROS",
    "run_repro",
]

logger = logging.getLogger(__name__)

SAMPLE_RATE = 20e6
SCENARIO_BANDS_HZ = ((-4e6, -2e6), (4e6, 5e6), (8e6, 9e6))
BITS = (8, 10, 12, 14, 16)

# (interval in MHz, depth in dB or "var" for the swept depth)
EMITTER_CASES = {
    1: [((-10, -6), 10), ((-3, -2), "var"), ((2, 4), "var")],
    2: [((-7, -6), 10), ((-3, -2), "var"), ((2, 4), "var"), ((6.5, 9), 10)],
    3: [((-9, -8), 10), ((-7, -6), "var"), ((-5, -4), 10), ((-3, -2), 10), ((2, 4), "var"), ((6.5, 9), "var")],
}


def scenario_bands(depth_db=None, intervals=SCENARIO_BANDS_HZ, sample_rate=SAMPLE_RATE):
    out = []
    for lo, hi in intervals:
        out += bands_from_hz(lo, hi, sample_rate, depth_db)
    return out


def band_hz(band, sample_rate=SAMPLE_RATE):
    """Band edges in Hz on the centered axis ``[-fs/2, fs/2]``."""
    lo, hi = band.f_lo, band.f_hi
    if lo >= 0.5:
        lo, hi = lo - 1, hi - 1
    return round(lo * sample_rate, 3), round(hi * sample_rate, 3)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def design_waveforms(n, seed=0, depth_db=60.0, blocks=(1000, 5000), threads=1):
    """Reference, projection and block-wise QCQP waveforms for the 3-band scenario."""
    c0 = generate_reference(n, seed)
    bands = scenario_bands(depth_db)
    out = {"ref": c0, "proj": project_notch(c0, bands)}

    def one(block):
        c, _ = design_blockwise(c0, bands, min(block, n), min(block, n) // 2)
        return c

    for block, c in zip(blocks, _map(one, blocks, threads)):
        out[f"qcqp_{block}"] = c
    return out, bands


def _depth_rows(label, depths):
    rows = []
    for d in depths:
        lo, hi = band_hz(d.band)
        rows.append([label, lo, hi, d.mean_db, d.min_db, d.edge_lo_db, d.edge_hi_db])
    return rows


_DEPTH_HEADER = ["waveform", "band_lo_hz", "band_hi_hz", "depth_mean_db", "depth_min_db", "edge_lo_db", "edge_hi_db"]


def repro_fig2(n=100000, seed=0, threads=1):
    """Welch PSDs of the reference and notched designs, plus notch depths."""
    waves, bands = design_waveforms(n, seed, threads=threads)
    level = mean_psd_level(waves["ref"])
    psds = {k: welch_psd(v, normalize=level, sample_rate=SAMPLE_RATE) for k, v in waves.items()}
    names = list(waves)
    freqs = psds["ref"].frequencies_hz
    psd_rows = [[f] + [float(psds[k].power_db[i]) for k in names] for i, f in enumerate(freqs)]
    depth_rows = []
    for k in names[1:]:
        depth_rows += _depth_rows(k, notch_depth(welch_psd(waves[k]), bands))
    return {
        "fig2_psd.csv": (["freq_hz"] + [f"{k}_db" for k in names], psd_rows),
        "fig2_depth.csv": (_DEPTH_HEADER, depth_rows),
    }


def repro_fig4(n=10000, seed=0, threads=1, segment_len=200):
    """Spectrograms (segments of 10 us) of the notched designs, long format."""
    waves, _ = design_waveforms(n, seed, threads=threads)
    rows = []
    for k in ("proj", "qcqp_1000", "qcqp_5000"):
        sg = spectrogram(waves[k], segment_len)
        for j, t in enumerate(sg.times):
            t_us = t / SAMPLE_RATE * 1e6
            for i, f in enumerate(sg.frequencies):
                rows.append([k, t_us, f * SAMPLE_RATE, float(sg.power_db[i, j])])
    return {"fig4_spectrogram.csv": (["waveform", "time_us", "freq_hz", "power_db"], rows)}


def repro_fig5(n=100000, seed=0, threads=1, max_lag=20, segment_len=200, tradeoff_depths=(5, 10, 20, 30, 60)):
    """Autocorrelations near lag 0, PSLL summary and the depth trade-off."""
    waves, _ = design_waveforms(n, seed, threads=threads)
    names = list(waves)
    acfs = {k: autocorrelation(v, max_lag) for k, v in waves.items()}
    lags = acfs["ref"].lags
    acf_rows = [[int(l), l / SAMPLE_RATE * 1e6] + [float(acfs[k].magnitude_db[i]) for k in names] for i, l in enumerate(lags)]
    psll_rows = []
    for k in names:
        seg = autocorrelation(waves[k][:segment_len])
        psll_rows.append([k, acfs[k].pslr_db, seg.pslr_db])

    c0 = waves["ref"]

    def one(depth):
        c, _ = design_blockwise(c0, scenario_bands(depth), min(1000, n), min(1000, n) // 2)
        return autocorrelation(c, max_lag).pslr_db

    ref_psll = acfs["ref"].pslr_db
    trade_rows = [[d, p, p - ref_psll] for d, p in zip(tradeoff_depths, _map(one, tradeoff_depths, threads))]
    return {
        "fig5_acf.csv": (["lag", "lag_us"] + [f"{k}_db" for k in names], acf_rows),
        "fig5_psll.csv": (["waveform", "psll_db", f"psll_{segment_len}_db"], psll_rows),
        "fig5_tradeoff.csv": (["depth_db", "psll_db", "psll_minus_ref_db"], trade_rows),
    }


def repro_fig6(n=100000, seed=0, threads=1, bits=BITS):
    """PSD and notch depth of the projection design after quantization."""
    c0 = generate_reference(n, seed)
    bands = scenario_bands()
    scaled, _ = full_scale_normalize(project_notch(c0, bands))
    curves = {"unquantized": scaled}
    for b in bits:
        curves[f"b{b}"] = quantize(scaled, b)
    level = mean_psd_level(scaled)
    psds = {k: welch_psd(v, normalize=level, sample_rate=SAMPLE_RATE) for k, v in curves.items()}
    names = list(curves)
    freqs = psds["unquantized"].frequencies_hz
    psd_rows = [[f] + [float(psds[k].power_db[i]) for k in names] for i, f in enumerate(freqs)]
    depth_rows = []
    for k in names:
        depth_rows += _depth_rows(k, notch_depth(psds[k], bands))
    return {
        "fig6_psd.csv": (["freq_hz"] + [f"{k}_db" for k in names], psd_rows),
        "fig6_depth.csv": (_DEPTH_HEADER, depth_rows),
    }


def _quantization_reports(n, seed, bits):
    c0 = generate_reference(n, seed)
    scaled, _ = full_scale_normalize(project_notch(c0, scenario_bands()))
    return n, [quantization_report(scaled, b) for b in bits]


def repro_table1(n=100000, seed=0, threads=1, bits=BITS):
    """Energy of the quantization error against ``2 N step^2 / 12``."""
    n, reports = _quantization_reports(n, seed, bits)
    rows = [[r.bits, r.step, r.energy_diff, 2 * n * r.step**2 / 12] for r in reports]
    return {"table1.csv": (["bits", "step", "energy_diff", "predicted_energy_diff"], rows)}


def repro_table2(n=100000, seed=0, threads=1, bits=BITS):
    """Estimated versus theoretical error variance, and error histograms."""
    _, reports = _quantization_reports(n, seed, bits)
    rows = [
        [r.bits, r.est_variance_re, r.est_variance_im, r.theory_variance, r.relative_error_re] for r in reports
    ]
    hist = []
    for r in reports:
        width = np.diff(r.histogram_edges)
        density = r.histogram_counts / (r.histogram_counts.sum() * width)
        for i, cnt in enumerate(r.histogram_counts):
            hist.append([r.bits, r.histogram_edges[i], r.histogram_edges[i + 1], int(cnt), float(density[i])])
    return {
        "table2.csv": (["bits", "est_variance_re", "est_variance_im", "theory_variance", "relative_error_re"], rows),
        "table2_hist.csv": (["bits", "bin_lo", "bin_hi", "count", "density"], hist),
    }


def repro_table3(trials=50, seed=0, threads=1, cfg=None):
    """Coexistence simulation: error rate and radar SINR per jammer type."""
    cfg = cfg or ScenarioConfig(trials=trials, seed=seed)
    report = run_scenario(cfg, threads=threads)
    types, rows = report.table_rows()
    out = {"table3.csv": (["metric"] + types, rows)}
    scatter = []
    for t, pts in report.scatter.items():
        scatter += [[t, float(a), float(b)] for a, b in pts]
    out["table3_scatter.csv"] = (["jammer", "a_i", "a_q"], scatter)
    if report.psd:
        names = list(report.psd)
        freqs = report.psd[names[0]].frequencies_hz
        out["table3_psd.csv"] = (
            ["freq_hz"] + [f"{k}_db" for k in names],
            [[f] + [float(report.psd[k].power_db[i]) for k in names] for i, f in enumerate(freqs)],
        )
    return out


def repro_fig11(n=1000, seed=0, threads=1, block_len=100, segment_len=500):
    """Single block against ``n / block_len`` non-overlapping blocks."""
    c0 = generate_reference(n, seed)
    bands = bands_from_hz(-8e6, -4e6, SAMPLE_RATE, 80.0) + bands_from_hz(4e6, 6e6, SAMPLE_RATE, 10.0)
    designs = {}
    designs["L1"], _ = design_blockwise(c0, bands)
    designs[f"L{n // block_len}"], _ = design_blockwise(c0, bands, block_len, 0)
    psds = {k: welch_psd(v, segment_len, sample_rate=SAMPLE_RATE) for k, v in designs.items()}
    names = list(designs)
    freqs = psds[names[0]].frequencies_hz
    psd_rows = [[f] + [float(psds[k].power_db[i]) for k in names] for i, f in enumerate(freqs)]
    depth_rows = []
    for k in names:
        depth_rows += _depth_rows(k, notch_depth(psds[k], bands))
    return {
        "fig11_psd.csv": (["freq_hz"] + [f"{k}_db" for k in names], psd_rows),
        "fig11_depth.csv": (_DEPTH_HEADER, depth_rows),
    }


def emitter_bands(case, depth_db, sample_rate=SAMPLE_RATE):
    """Stop bands and their requested depths for one multi-emitter case."""
    bands, targets = [], []
    for (lo, hi), d in EMITTER_CASES[case]:
        d = depth_db if d == "var" else d
        pieces = bands_from_hz(lo * 1e6, hi * 1e6, sample_rate, d)
        bands += pieces
        targets += [d] * len(pieces)
    return bands, targets


def repro_emitters(n=1000, seed=0, threads=1, depths=(10, 20, 40, 60, 80), segment_len=500):
    """Single-block designs for 3, 4 and 6 friendly emitters."""
    c0 = generate_reference(n, seed)
    rows = []
    for case in EMITTER_CASES:
        for depth in depths:
            bands, targets = emitter_bands(case, depth)
            c, diags = design_blockwise(c0, bands)
            measured = notch_depth(welch_psd(c, segment_len), bands)
            for m, target, slack in zip(measured, targets, diags[0].band_slack):
                lo, hi = band_hz(m.band)
                rows.append([case, depth, lo, hi, target, m.mean_db, m.min_db, slack])
    header = ["case", "swept_depth_db", "band_lo_hz", "band_hi_hz", "target_db", "depth_mean_db", "depth_min_db", "slack"]
    return {"emitters.csv": (header, rows)}


REPROS = {
    "fig2": repro_fig2,
    "fig4": repro_fig4,
    "fig5": repro_fig5,
    "fig6": repro_fig6,
    "table1": repro_table1,
    "table2": repro_table2,
    "table3": repro_table3,
    "fig11": repro_fig11,
    "emitters": repro_emitters,
}


def run_repro(name, outdir, threads=1, **kwargs):
    """Run one reproduction and write its CSV files; returns the paths."""
    if name not in REPROS:
        raise ValueError(f"unknown reproduction {name!r}; choose from {sorted(REPROS)}")
    outdir = Path(outdir)
    tables = REPROS[name](threads=threads, **kwargs)
    paths = []
    for fname, (header, rows) in tables.items():
        paths.append(write_csv(outdir / fname, header, rows))
        logger.info("wrote %s", outdir / fname)
    return paths
