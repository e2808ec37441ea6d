"""Command-line interface.

Every report is a CSV file with a one-line header. Failures print a single
JSON object on stderr, e.g.
``{"error": "ConfigError", "message": "...", "exit_code": 2}``.

Exit codes: 0 success, 1 unexpected error, 2 bad config or input,
3 infeasible constraints, 4 solver did not converge.
"""

import argparse
import inspect
import json
import logging
from pathlib import Path
import sys
import warnings

from sklearn.exceptions import ConvergenceWarning

from . import __version__
from .analysis import autocorrelation, mean_psd_level, notch_depth, welch_psd
from .config import ConfigError, load_design_config, load_scenario_config, run_design
from .io import FormatError, read_waveform, write_csv, write_waveform
from .quantization import full_scale_normalize, quantization_report, quantize
from .qcqp import InfeasibleError
from .repro import REPROS, band_hz, repro_table3, run_repro
from .spectral import bands_from_hz

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_ERROR", "EXIT_CONFIG", "EXIT_INFEASIBLE", "EXIT_NOT_CONVERGED"]

logger = logging.getLogger("notchjam")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4


class CliError(Exception):
    def __init__(self, message, exit_code=EXIT_ERROR, **extra):
        super().__init__(message)
        self.exit_code = exit_code
        self.extra = extra


def _parse_bits(text):
    try:
        bits = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bits must be comma-separated integers, got {text!r}") from None
    if not bits or any(b < 1 for b in bits):
        raise argparse.ArgumentTypeError("bits must be positive integers")
    return bits


def build_parser():
    p = argparse.ArgumentParser(prog="notchjam", description="Design and analyse spectrally notched noise waveforms.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=1, help="worker threads for parallel stages (default: 1)")
    p.add_argument("--log-level", default="WARNING", help="logging level (default: WARNING)")
    p.add_argument("--repro", choices=sorted(REPROS), help="shortcut for 'repro NAME' with default options")
    p.add_argument("--outdir", default=".", help="output directory for --repro (default: .)")
    sub = p.add_subparsers(dest="command")

    d = sub.add_parser("design", help="synthesize a notched waveform from a config file")
    d.add_argument("config", help="YAML/JSON design config (searched in $NOTCHJAM_CONFIG_PATH if relative)")
    d.add_argument("output", help="waveform file to write; a .json sidecar is written next to it")
    d.add_argument("--diagnostics", help="per-window diagnostics CSV (default: <output>.diag.csv for qcqp)")

    a = sub.add_parser("analyze", help="PSD, autocorrelation and notch depth of waveform files")
    a.add_argument("inputs", nargs="+")
    a.add_argument("--outdir", default=".", help="directory for the CSV reports (default: .)")
    a.add_argument("--segment-len", type=int, default=1000, help="Welch segment length (default: 1000)")
    a.add_argument("--overlap", type=float, default=0.5, help="Welch segment overlap (default: 0.5)")
    a.add_argument("--max-lag", type=int, default=20, help="largest ACF lag reported (default: 20)")
    a.add_argument("--reference", help="normalize every PSD to this waveform's mean PSD (default: each its own)")

    q = sub.add_parser("quantize", help="quantization error statistics of a waveform file")
    q.add_argument("input")
    q.add_argument("--bits", type=_parse_bits, default=[8, 10, 12, 14, 16], help="comma-separated bit depths (default: 8,10,12,14,16)")
    q.add_argument("--outdir", default=".", help="directory for the CSV reports (default: .)")
    q.add_argument("--bins", type=int, default=50, help="histogram bins (default: 50)")
    q.add_argument("--save", action="store_true", help="also write each quantized waveform")

    s = sub.add_parser("simulate", help="jammer / link / radar coexistence simulation")
    s.add_argument("--scenario", help="YAML/JSON scenario config (default: built-in scenario)")
    s.add_argument("--trials", type=int, help="override the number of snapshots")
    s.add_argument("--outdir", default=".", help="directory for the CSV reports (default: .)")

    r = sub.add_parser("repro", help="canned reproduction of a reference figure or table")
    r.add_argument("name", choices=sorted(REPROS))
    r.add_argument("--outdir", default=".", help="directory for the CSV reports (default: .)")
    r.add_argument("--seed", type=int, default=None, help="random seed (default: 0)")
    r.add_argument("-n", "--length", type=int, default=None, help="waveform length where applicable")
    r.add_argument("--trials", type=int, default=None, help="snapshots for table3")
    return p


def _digest(diags):
    if not diags:
        return {}
    slacks = [min(d.band_slack) for d in diags if d.band_slack]
    return {
        "windows": len(diags),
        "converged": all(d.converged for d in diags),
        "max_iterations": max(d.iterations for d in diags),
        "worst_band_slack": min(slacks) if slacks else None,
        "total_objective": float(sum(d.objective for d in diags)),
    }


def cmd_design(args):
    cfg = load_design_config(args.config)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            c, diags = run_design(cfg)
    except InfeasibleError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE, window=exc.window, band=exc.band) from None
    out = Path(args.output)
    diag_path = args.diagnostics or (str(out) + ".diag.csv" if cfg.method == "qcqp" else None)
    if diag_path:
        n_bands = max((len(d.band_slack) for d in diags), default=0)
        header = ["window", "start", "n_free", "iterations", "converged", "objective", "energy", "energy_cap"]
        header += [f"slack_band{k}" for k in range(n_bands)]
        rows = [
            [d.window, d.start, d.n_free, d.iterations, d.converged, d.objective, d.energy, d.energy_cap] + list(d.band_slack)
            for d in diags
        ]
        write_csv(diag_path, header, rows)
    digest = _digest(diags)
    if diags and not digest["converged"]:
        bad = [d.window for d in diags if not d.converged]
        raise CliError(f"{len(bad)} window(s) did not converge", EXIT_NOT_CONVERGED, windows=bad[:20])
    meta = {
        "method": cfg.method,
        "seed": cfg.seed,
        "reference": cfg.reference,
        "bands_hz": [[lo, hi] for lo, hi, _ in cfg.bands],
        "depths_db": [depth for _, _, depth in cfg.bands],
        "block_len": cfg.block_len,
        "overlap": cfg.overlap,
        "diagnostics": digest,
    }
    write_waveform(out, c, cfg.sample_rate, metadata=meta)
    print(json.dumps({"output": str(out), "n_samples": int(c.size), **digest}))
    return EXIT_OK


def _load(path):
    try:
        return read_waveform(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", EXIT_CONFIG) from None
    except FormatError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def _bands_from_meta(wf):
    meta = wf.metadata or {}
    out = []
    for (lo, hi), depth in zip(meta.get("bands_hz", []), meta.get("depths_db", [])):
        out += bands_from_hz(lo, hi, wf.sample_rate, depth)
    return out


def _map(fn, items, threads):
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_analyze(args):
    files = [_load(p) for p in args.inputs]
    names = [Path(p).stem for p in args.inputs]
    level = "mean"
    if args.reference:
        level = mean_psd_level(_load(args.reference).samples, args.segment_len, args.overlap)

    def one(wf):
        psd = welch_psd(wf.samples, args.segment_len, args.overlap, normalize=level, sample_rate=wf.sample_rate)
        acf = autocorrelation(wf.samples, args.max_lag)
        bands = _bands_from_meta(wf)
        depths = notch_depth(welch_psd(wf.samples, args.segment_len, args.overlap), bands) if bands else []
        return psd, acf, depths

    try:
        results = _map(one, files, args.threads)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    out = Path(args.outdir)
    freqs = results[0][0].frequencies_hz
    if any(r[0].frequencies.size != freqs.size for r in results):
        raise CliError("inputs give PSDs of different sizes", EXIT_CONFIG)
    write_csv(
        out / "psd.csv",
        ["freq_hz"] + [f"{n}_db" for n in names],
        [[f] + [float(r[0].power_db[i]) for r in results] for i, f in enumerate(freqs)],
    )
    lags = results[0][1].lags
    acf_rows = []
    for i, lag in enumerate(lags):
        acf_rows.append([int(lag)] + [float(r[1].magnitude_db[i]) if i < r[1].lags.size else "" for r in results])
    write_csv(out / "acf.csv", ["lag"] + [f"{n}_db" for n in names], acf_rows)
    depth_rows = []
    for name, wf, r in zip(names, files, results):
        for d in r[2]:
            lo, hi = band_hz(d.band, wf.sample_rate)
            depth_rows.append([name, lo, hi, d.mean_db, d.min_db, d.edge_lo_db, d.edge_hi_db])
    write_csv(out / "depth.csv", ["waveform", "band_lo_hz", "band_hi_hz", "depth_mean", "depth_min", "edge_lo_db", "edge_hi_db"], depth_rows)
    write_csv(out / "psll.csv", ["waveform", "psll_db"], [[n, r[1].pslr_db] for n, r in zip(names, results)])
    return EXIT_OK


def cmd_quantize(args):
    wf = _load(args.input)
    scaled, scale = full_scale_normalize(wf.samples)
    reports = [quantization_report(scaled, b, args.bins) for b in args.bits]
    out = Path(args.outdir)
    write_csv(
        out / "quantization.csv",
        ["bits", "step", "energy_diff", "est_var_re", "est_var_im", "theory_var"],
        [[r.bits, r.step, r.energy_diff, r.est_variance_re, r.est_variance_im, r.theory_variance] for r in reports],
    )
    hist = []
    for r in reports:
        for i, cnt in enumerate(r.histogram_counts):
            hist.append([r.bits, r.histogram_edges[i], r.histogram_edges[i + 1], int(cnt)])
    write_csv(out / "histogram.csv", ["bits", "bin_lo", "bin_hi", "count"], hist)
    bands = _bands_from_meta(wf)
    if bands:
        rows = []
        for b in [None] + list(args.bits):
            x = scaled if b is None else quantize(scaled, b)
            for d in notch_depth(welch_psd(x), bands):
                lo, hi = band_hz(d.band, wf.sample_rate)
                rows.append(["none" if b is None else b, lo, hi, d.mean_db, d.min_db])
        write_csv(out / "notch_depth.csv", ["bits", "band_lo_hz", "band_hi_hz", "depth_mean", "depth_min"], rows)
    if args.save:
        stem = Path(args.input).stem
        for b in args.bits:
            meta = dict(wf.metadata, bits=b, scale=scale)
            write_waveform(out / f"{stem}_b{b}.nwf", quantize(scaled, b), wf.sample_rate, True, meta)
    return EXIT_OK


def cmd_simulate(args):
    cfg = load_scenario_config(args.scenario) if args.scenario else None
    if cfg is None:
        from .coexistence import ScenarioConfig

        cfg = ScenarioConfig()
    if args.trials is not None:
        from dataclasses import replace

        cfg = replace(cfg, trials=args.trials)
    tables = repro_table3(cfg=cfg, threads=args.threads)
    for fname, (header, rows) in tables.items():
        write_csv(Path(args.outdir) / fname.replace("table3", "coexistence"), header, rows)
    return EXIT_OK


def cmd_repro(args, name=None):
    name = name or args.name
    fn = REPROS[name]
    params = inspect.signature(fn).parameters
    kwargs = {}
    for opt, key in (("seed", "seed"), ("length", "n"), ("trials", "trials")):
        value = getattr(args, opt, None)
        if value is None:
            continue
        if key not in params:
            raise CliError(f"--{opt} is not used by repro {name}", EXIT_CONFIG)
        kwargs[key] = value
    run_repro(name, args.outdir, threads=args.threads, **kwargs)
    return EXIT_OK


_COMMANDS = {
    "design": cmd_design,
    "analyze": cmd_analyze,
    "quantize": cmd_quantize,
    "simulate": cmd_simulate,
    "repro": cmd_repro,
}


def _fail(exc_name, message, code, **extra):
    payload = {"error": exc_name, "message": message, "exit_code": code}
    payload.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(payload, default=str), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        return _fail("UsageError", "--threads must be >= 1", EXIT_CONFIG)
    try:
        if args.repro:
            return cmd_repro(args, args.repro)
        if args.command is None:
            parser.print_help()
            return EXIT_CONFIG
        return _COMMANDS[args.command](args)
    except CliError as exc:
        return _fail(type(exc).__name__, str(exc), exc.exit_code, **exc.extra)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), EXIT_CONFIG)
    except InfeasibleError as exc:
        return _fail("InfeasibleError", str(exc), EXIT_INFEASIBLE, window=exc.window, band=exc.band)
    except (ValueError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
