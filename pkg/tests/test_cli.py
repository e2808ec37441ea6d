import csv
import json
import subprocess
import sys

import pytest

from notchjam import __version__
from notchjam.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, main
from notchjam.io import read_waveform
from notchjam.spectral import bands_from_hz, check_constraints

PROJ_CFG = """\
sample_rate: 20e6
length: 100000
method: proj
bands:
  - {f_lo: -4e6, f_hi: -2e6}
  - {f_lo: 4e6, f_hi: 5e6}
  - {f_lo: 8e6, f_hi: 9e6}
"""

QCQP_CFG = """\
sample_rate: 20e6
length: 6000
method: qcqp
blocks: {block_len: 1000, overlap: 500}
bands:
  - {f_lo: -4e6, f_hi: -2e6, depth_db: 60}
  - {f_lo: 8e6, f_hi: 9e6, depth_db: 40}
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_projection_design_meets_null(tmp_path, capsys):
    cfg = write(tmp_path, "proj.yaml", PROJ_CFG)
    code, out, _ = run(capsys, "design", cfg, tmp_path / "w.nwf")
    assert code == EXIT_OK
    wf = read_waveform(tmp_path / "w.nwf")
    assert wf.n_samples == 100000 and wf.sample_rate == 20e6
    bands = [b for lo, hi in ((-4e6, -2e6), (4e6, 5e6), (8e6, 9e6)) for b in bands_from_hz(lo, hi, 20e6, None)]
    for chk in check_constraints(wf.samples, bands):
        assert chk.energy <= 1e-10
    assert json.loads(out)["n_samples"] == 100000
    assert (tmp_path / "w.nwf.json").exists()


def test_qcqp_design_writes_diagnostics(tmp_path, capsys):
    cfg = write(tmp_path, "q.yaml", QCQP_CFG)
    code, out, _ = run(capsys, "design", cfg, tmp_path / "q.nwf")
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "q.nwf.diag.csv")
    assert len(rows) == 11
    assert all(float(r["slack_band0"]) >= -1e-9 and r["converged"] == "1" for r in rows)
    summary = json.loads(out)
    assert summary["windows"] == 11 and summary["converged"]
    assert read_waveform(tmp_path / "q.nwf").metadata["diagnostics"]["windows"] == 11


@pytest.mark.parametrize(
    "text",
    [
        PROJ_CFG.replace("{f_lo: 4e6, f_hi: 5e6}", "{f_lo: 5e6, f_hi: 4e6}"),
        PROJ_CFG.replace("{f_lo: 8e6, f_hi: 9e6}", "{f_lo: 8e6, f_hi: 12e6}"),
        PROJ_CFG + "unknown_key: 1\n",
        "sample_rate: [oops\n",
    ],
)
def test_malformed_config_exits_with_json(tmp_path, capsys, text):
    cfg = write(tmp_path, "bad.yaml", text)
    code, _, err = run(capsys, "design", cfg, tmp_path / "w.nwf")
    assert code == EXIT_CONFIG
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["exit_code"] == EXIT_CONFIG and payload["error"] == "ConfigError" and payload["message"]
    assert not (tmp_path / "w.nwf").exists()


def test_infeasible_design_exit_code(tmp_path, capsys):
    text = "sample_rate: 1.0\nlength: 60\nmethod: qcqp\nblocks: {block_len: 16, overlap: 8}\nbands:\n  - {f_lo: 0.0, f_hi: 0.5}\n"
    code, _, err = run(capsys, "design", write(tmp_path, "inf.yaml", text), tmp_path / "w.nwf")
    assert code == EXIT_INFEASIBLE
    assert json.loads(err)["window"] == 6


def test_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "analyze", tmp_path / "nope.nwf")
    assert code == EXIT_CONFIG and "no such file" in json.loads(err)["message"]


def test_analyze_and_quantize(tmp_path, capsys):
    cfg = write(tmp_path, "proj.yaml", PROJ_CFG.replace("100000", "20000"))
    assert run(capsys, "design", cfg, tmp_path / "w.nwf")[0] == EXIT_OK
    code, _, _ = run(capsys, "analyze", tmp_path / "w.nwf", "--outdir", tmp_path / "a")
    assert code == EXIT_OK
    depth = read_csv(tmp_path / "a" / "depth.csv")
    assert len(depth) == 3 and all(float(r["depth_min"]) > 90 for r in depth)
    assert len(read_csv(tmp_path / "a" / "psd.csv")) == 1000
    assert len(read_csv(tmp_path / "a" / "acf.csv")) == 41
    code, _, _ = run(capsys, "quantize", tmp_path / "w.nwf", "--bits", "8,16", "--outdir", tmp_path / "q", "--save")
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "q" / "quantization.csv")
    assert [r["bits"] for r in rows] == ["8", "16"]
    nd = read_csv(tmp_path / "q" / "notch_depth.csv")
    d8 = min(float(r["depth_mean"]) for r in nd if r["bits"] == "8")
    d16 = min(float(r["depth_mean"]) for r in nd if r["bits"] == "16")
    assert d8 < d16
    q8 = read_waveform(tmp_path / "q" / "w_b8.nwf")
    assert q8.full_scale and q8.metadata["bits"] == 8


def test_bad_bits(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["quantize", "x.nwf", "--bits", "8,zero"])
    assert exc.value.code == 2


def test_repro_table2(tmp_path, capsys):
    code, _, _ = run(capsys, "repro", "table2", "--outdir", tmp_path, "-n", 100000)
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "table2.csv")
    theory = {"8": 5.0863e-6, "10": 3.1789e-7, "12": 1.9868e-8, "14": 1.2418e-9, "16": 7.7610e-11}
    for r in rows:
        assert float(f"{float(r['theory_variance']):.4e}") == theory[r["bits"]]
        assert abs(float(r["est_variance_re"]) / float(r["theory_variance"]) - 1) < 0.05
    assert (tmp_path / "table2_hist.csv").exists()


def test_repro_fig2_small(tmp_path, capsys):
    code, _, _ = run(capsys, "repro", "fig2", "-n", 10000, "--outdir", tmp_path)
    assert code == EXIT_OK
    depth = read_csv(tmp_path / "fig2_depth.csv")
    by_wf = {}
    for r in depth:
        by_wf.setdefault(r["waveform"], []).append(float(r["depth_min_db"]))
    assert set(by_wf) >= {"proj", "qcqp_1000", "qcqp_5000"}
    assert min(min(v) for k, v in by_wf.items() if k != "reference") >= 50


def test_repro_is_byte_identical(tmp_path, capsys):
    for d in ("r1", "r2"):
        assert run(capsys, "repro", "fig11", "--outdir", tmp_path / d)[0] == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "r1").iterdir())
    assert files
    for name in files:
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_repro_rejects_unused_option(tmp_path, capsys):
    code, _, err = run(capsys, "repro", "table3", "-n", 100, "--outdir", tmp_path)
    assert code == EXIT_CONFIG and "--length" in json.loads(err)["message"]


def test_simulate_small(tmp_path, capsys):
    scen = write(tmp_path, "s.yaml", "radar: {pulses: [1, 2]}\njammer: {types: [none, reference, proj]}\n")
    code, _, _ = run(capsys, "simulate", "--scenario", scen, "--trials", 2, "--outdir", tmp_path)
    assert code == EXIT_OK
    produced = sorted(p.name for p in tmp_path.glob("coexistence*.csv"))
    assert produced


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "notchjam", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
    res = subprocess.run([sys.executable, "-m", "notchjam", "--threads", "0", "repro", "fig2"], capture_output=True, text=True)
    assert res.returncode == EXIT_CONFIG and json.loads(res.stderr)["error"] == "UsageError"
