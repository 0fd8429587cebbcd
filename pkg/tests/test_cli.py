import csv
import json
import math

import numpy as np
import pytest

from biphoton_qudit_sim.cli import build_parser, main, read_slice_csv, resolve_config
from biphoton_qudit_sim.experiment import read_scan_csv, read_table_csv
from biphoton_qudit_sim.states import read_state_csv


def report(path):
    with open(path) as fh:
        return {row["metric"]: row["value"] for row in csv.DictReader(fh)}


def test_prepare_ideal_and_cc(tmp_path):
    assert main(["prepare", "--mode", "ideal", "--out", str(tmp_path)]) == 0
    psi = read_state_csv(tmp_path / "state.csv")
    assert psi.dimension == 4 and psi.is_normalized
    assert main(["prepare", "--mode", "cc", "--dimension", "8", "--out", str(tmp_path)]) == 0
    cc = read_state_csv(tmp_path / "mixture.csv")
    assert cc.dimension == 8 and np.allclose(cc.weights, 1 / 8)


def test_prepare_projected_state(tmp_path, capsys):
    assert main(["prepare", "--mode", "numeric", "--pump-waist", "4.5e-5", "--out", str(tmp_path)]) == 0
    psi = read_state_csv(tmp_path / "state.csv")
    assert psi.norm == pytest.approx(1.0, abs=1e-10)
    assert "norm=1.000000000000" in capsys.readouterr().out


def test_scan_all_and_analyze(tmp_path, capsys):
    out = tmp_path / "scans"
    assert main(["scan", "--all", "--mode", "ideal", "--plot", "--out", str(out)]) == 0
    files = sorted(out.glob("scan_l*.csv"))
    assert [f.name for f in files] == ["scan_l+1.csv", "scan_l+3.csv", "scan_l-1.csv", "scan_l-3.csv"]
    assert all(f.with_suffix(".svg").exists() for f in files)
    assert read_scan_csv(out / "scan_l+3.csv").seed == 20051
    res = tmp_path / "res"
    assert main(["analyze", "--scans", *map(str, files), "--out", str(res)]) == 0
    table = read_table_csv(res / "histogram.csv")
    assert np.allclose(np.diag(np.fliplr(table.probabilities)), 0.25, atol=0.05)
    assert float(report(res / "report.csv")["fidelity"]) > 0.98
    assert "probability table" in capsys.readouterr().out


def test_scan_single_slit_noiseless(tmp_path):
    assert main(["scan", "--fixed-slit=-1/2", "--noiseless", "--out", str(tmp_path)]) == 0
    rec = read_scan_csv(tmp_path / "scan_l-1.csv")
    assert rec.coincidences.dtype.kind == "f"


def test_analyze_printed_amplitudes(tmp_path):
    assert main(["analyze", "--amplitudes", "0.49,0.50,0.50,0.49", "--out", str(tmp_path)]) == 0
    r = report(tmp_path / "report.csv")
    assert float(r["fidelity"]) == pytest.approx(0.9801, abs=1e-12)
    assert float(r["reconstruction_norm_sq"]) == pytest.approx(0.9802, abs=1e-12)
    assert main(["analyze", "--amplitudes", "0.49,0.50,0.50,0.49", "--renormalize", "--out", str(tmp_path)]) == 0
    assert float(report(tmp_path / "report.csv")["fidelity"]) == pytest.approx(0.9801 / 0.9802, abs=1e-12)


def test_analyze_mixture_diagnostics(tmp_path):
    main(["prepare", "--mode", "cc", "--out", str(tmp_path)])
    assert main(["analyze", "--state", str(tmp_path / "mixture.csv"), "--out", str(tmp_path)]) == 0
    r = report(tmp_path / "report.csv")
    assert float(r["negativity"]) == 0.0
    assert float(r["purity"]) == 0.25


def test_interfere_and_witness(tmp_path, capsys):
    assert main(["interfere", "--mode", "ideal", "--plot", "--out", str(tmp_path / "q")]) == 0
    assert "verdict=entangled-signature" in capsys.readouterr().out
    assert (tmp_path / "q" / "slices.svg").exists()
    s0 = read_slice_csv(tmp_path / "q" / "slice_0.csv")
    s1 = read_slice_csv(tmp_path / "q" / "slice_1.csv")
    assert s0.x2 == 0.0 and s1.x2 == 300e-6
    assert main(["interfere", "--source", "cc", "--out", str(tmp_path / "c")]) == 0
    assert "verdict=no-signature" in capsys.readouterr().out
    slices = [str(tmp_path / "q" / f"slice_{k}.csv") for k in (0, 1)]
    assert main(["analyze", "--slices", *slices, "--out", str(tmp_path)]) == 0
    assert report(tmp_path / "report.csv")["verdict"] == "entangled-signature"


def test_interfere_custom_slices_and_smoothing(tmp_path):
    assert main(["interfere", "--x2", "0", "1e-4", "2e-4", "--fringe-points", "201", "--smoothed",
                 "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("slice_*.csv"))) == 3
    assert len(read_slice_csv(tmp_path / "slice_2.csv").x1) == 201


def test_map(tmp_path):
    assert main(["map", "--map-points", "21", "--plot", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "map.csv").read_text().splitlines()
    assert text[0] == "# provenance=entangled" and text[1] == "x1_m,x2_m,rate"
    assert len(text) == 2 + 21 * 21
    assert (tmp_path / "map.svg").read_text().startswith("<svg")


def test_geometry_error_exit_code(tmp_path, capsys):
    assert main(["prepare", "--slit-spacing", "0.05e-3", "--out", str(tmp_path)]) == 2
    assert "slits not disjoint" in capsys.readouterr().err
    assert main(["prepare", "--dimension", "1", "--out", str(tmp_path)]) == 2


def test_bad_config_file_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"noise": {"sede": 1}}))
    assert main(["prepare", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text("{not json")
    assert main(["prepare", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_degenerate_imaging_exit_code(tmp_path):
    assert main(["interfere", "--lens-position", "0.6", "--out", str(tmp_path)]) == 3


def test_quadrature_failure_exit_code(tmp_path):
    # pump parked in the gap beyond the aperture: nothing to integrate
    assert main(["prepare", "--mode", "numeric", "--pump-center", "0.05", "--out", str(tmp_path)]) == 3


def test_missing_input_exit_code(tmp_path):
    assert main(["analyze", "--scans", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 4
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["analyze", "--table", str(bad), "--out", str(tmp_path)]) == 4


def test_dimension_mismatch_exit_code(tmp_path):
    main(["prepare", "--dimension", "2", "--out", str(tmp_path)])
    assert main(["scan", "--all", "--state", str(tmp_path / "state.csv"), "--out", str(tmp_path)]) == 2


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"noise": {"seed": 5}}))
    parse = build_parser().parse_args
    monkeypatch.delenv("BQS_SEED", raising=False)
    assert resolve_config(parse(["scan", "--all", "--config", str(cfg)])).noise.seed == 5
    monkeypatch.setenv("BQS_SEED", "6")
    assert resolve_config(parse(["scan", "--all", "--config", str(cfg)])).noise.seed == 6
    assert resolve_config(parse(["scan", "--all", "--config", str(cfg), "--seed", "7"])).noise.seed == 7
    monkeypatch.setenv("BQS_SEED", "x")
    assert main(["scan", "--all", "--out", str(tmp_path)]) == 2


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"geometry": {"dimension": 8, "z_aperture": 0.25}, "grids": {"x2_slices": [0, 1e-4]}}))
    c = resolve_config(build_parser().parse_args(["interfere", "--config", str(cfg), "--dimension", "2"]))
    assert c.geometry.dimension == 2 and c.geometry.z_aperture == 0.25
    assert c.grids.x2_slices == (0.0, 1e-4)


def test_help_lists_override_flags(capsys):
    with pytest.raises(SystemExit):
        main(["scan", "--help"])
    text = capsys.readouterr().out
    for flag in ("--wavelength", "--dimension", "--pump-waist", "--seed", "--flux", "--quad-rtol", "--x2"):
        assert flag in text


def test_scan_outputs_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["scan", "--all", "--seed", "99", "--out", str(tmp_path / name)]) == 0
    for f in sorted((tmp_path / "a").glob("*.csv")):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
