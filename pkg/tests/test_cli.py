import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from memwalk import experiments
from memwalk.cli import main
from memwalk.errors import ConfigError, InvariantViolation
from memwalk.experiments import DEFAULTS, ExperimentConfig, run_experiment
from memwalk.output import (
    HEIGHT,
    MARGIN,
    WIDTH,
    Series,
    emit_csv,
    emit_json,
    emit_svg_plot,
    format_number,
    sha256_file,
)

SVG = "{http://www.w3.org/2000/svg}"


# -- output primitives --------------------------------------------------------

def test_format_number_round_trips(rng):
    for v in rng.standard_normal(50) * 10.0 ** rng.integers(-20, 20, 50):
        assert float(format_number(v)) == v
    assert format_number(3) == "3"
    assert format_number(np.int64(-2)) == "-2"
    assert format_number(0.1) == "0.1"


@pytest.mark.parametrize("header", [("t", "x", "p"), ("t", "sigma2"), ("tau", "C")])
def test_emit_csv_headers(tmp_path, header):
    rows = [tuple(range(len(header))), tuple(0.5 for _ in header)]
    path = emit_csv(header, rows, tmp_path / "out.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(header)
    assert lines[1] == ",".join(str(i) for i in range(len(header)))
    assert lines[2] == ",".join("0.5" for _ in header)


def test_emit_csv_rejects_ragged(tmp_path):
    with pytest.raises(ValueError):
        emit_csv(("t", "x"), [(1, 2), (3,)], tmp_path / "bad.csv")


def test_emit_csv_error_names_path(tmp_path):
    target = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv(("t",), [(1,)], target)


def test_emit_json_plain(tmp_path):
    path = emit_json({"b": np.float64(1.5), "a": np.arange(2)}, tmp_path / "x.json")
    assert json.loads(path.read_text()) == {"a": [0, 1], "b": 1.5}


def _parse(path):
    return ET.parse(path).getroot()


def test_svg_single_series(tmp_path):
    path = emit_svg_plot([Series("s", [0, 1, 2], [1, 4, 9])], "x", "y", tmp_path / "a.svg")
    root = _parse(path)
    assert root.tag == f"{SVG}svg" and root.get("version") == "1.1"
    assert len(root.findall(f".//{SVG}polyline")) == 1
    assert len(root.findall(f".//{SVG}text[@class='tick']")) >= 4


def test_svg_two_series_legend(tmp_path):
    path = emit_svg_plot([Series("a", [0, 1], [0, 1]), Series("b", [0, 1], [1, 0])], "x", "y", tmp_path / "b.svg")
    root = _parse(path)
    assert len(root.findall(f".//{SVG}polyline")) == 2
    legend = root.find(f".//{SVG}g[@class='legend']")
    assert [t.text for t in legend.findall(f"{SVG}text")] == ["a", "b"]


def test_svg_scatter(tmp_path):
    path = emit_svg_plot([Series("pk", [1, 2, 3], [1, 2, 3], scatter=True)], "x", "y", tmp_path / "c.svg")
    assert len(_parse(path).findall(f".//{SVG}circle")) == 3


def test_svg_empty_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_svg_plot([], "x", "y", tmp_path / "d.svg")


def test_svg_log_log_mapping(tmp_path):
    x = np.array([1.0, 10.0, 100.0, 1000.0])
    y = np.array([5.0, 0.5, 0.05, 0.01])
    path = emit_svg_plot([Series("c", x, y)], "tau", "C", tmp_path / "e.svg", log_x=True, log_y=True)
    pts = _parse(path).find(f".//{SVG}polyline").get("points").split()
    px = [tuple(map(float, p.split(","))) for p in pts]
    left, right = MARGIN["left"], WIDTH - MARGIN["right"]
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    lx, ly = np.log10(x), np.log10(y)
    for i in (0, 1, 2):
        want_x = left + (lx[i] - lx.min()) / (lx.max() - lx.min()) * (right - left)
        want_y = bottom + (ly[i] - ly.min()) / (ly.max() - ly.min()) * (top - bottom)
        assert px[i][0] == pytest.approx(want_x, abs=0.006)
        assert px[i][1] == pytest.approx(want_y, abs=0.006)
    assert all(a[0] < b[0] for a, b in zip(px, px[1:]))
    assert all(a[1] < b[1] for a, b in zip(px, px[1:]))


# -- config -------------------------------------------------------------------

def test_config_round_trip():
    cfg = ExperimentConfig("fig6-correlation", {"reps": 100, "u_values": [0.1]}, "o", ("csv",), 5, 2)
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_config_rejects_unknown_param():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig("fig1-variance", {"gamma": 0.3})
    assert info.value.field == "params.gamma"


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"experiment": "fig1-variance", "colour": 1})
    assert info.value.field == "colour"


def test_config_rejects_unknown_experiment():
    with pytest.raises(ConfigError):
        ExperimentConfig("fig9")


def test_every_default_table_accepted():
    for name in DEFAULTS:
        assert ExperimentConfig(name, dict(DEFAULTS[name])).effective_params() == DEFAULTS[name]


# -- cli exit codes -----------------------------------------------------------

def _crw_args(out, *extra):
    return ["--experiment", "custom", "--param", "model=\"crw\"", "--param", "T=20",
            "--param", "reps=200", "--seed", "4", "--out", str(out), *extra]


def test_cli_success(tmp_path, capsys):
    assert main(_crw_args(tmp_path / "run")) == 0
    assert (tmp_path / "run" / "manifest.json").exists()
    assert "manifest.json" in capsys.readouterr().out


def test_cli_list(capsys):
    assert main(["--list"]) == 0
    assert set(json.loads(capsys.readouterr().out)) == set(DEFAULTS)


def test_cli_config_file_with_override(tmp_path):
    cfg = ExperimentConfig("custom", {"model": "coined", "T": 10}, str(tmp_path / "a"), ("csv",))
    path = tmp_path / "cfg.json"
    path.write_text(cfg.dumps())
    assert main(["--config", str(path), "--param", "T=12"]) == 0
    rows = (tmp_path / "a" / "variance.csv").read_text().splitlines()
    assert rows[0] == "t,sigma2" and len(rows) == 14


@pytest.mark.parametrize("argv", [
    ["--experiment", "fig1-variance", "--param", "bogus=1"],
    ["--experiment", "custom", "--param", "model=\"quantum\""],
    ["--experiment", "custom", "--param", "T=\"ten\""],
    ["--param", "T=3"],
])
def test_cli_config_errors(tmp_path, argv, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_bad_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    assert main(["--config", str(path)]) == 2


def test_cli_invariant_violation(tmp_path, monkeypatch, capsys):
    def broken(params, sink, cfg):
        raise InvariantViolation("trace", "drift 1e-3 at t=4")

    monkeypatch.setitem(experiments.EXPERIMENTS, "custom", broken)
    assert main(["--experiment", "custom", "--out", str(tmp_path)]) == 3
    assert "trace" in capsys.readouterr().err


def test_cli_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(_crw_args(blocker / "sub")) == 4
    assert "I/O error" in capsys.readouterr().err


def test_cli_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "none.json")]) == 4


# -- runs and manifests -------------------------------------------------------

def _check_manifest(out):
    doc = json.loads((out / "manifest.json").read_text())
    listed = {f["path"] for f in doc["files"]}
    present = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert listed == present
    for f in doc["files"]:
        assert sha256_file(out / f["path"]) == f["sha256"]
        assert (out / f["path"]).stat().st_size == f["bytes"]
    return doc


def test_manifest_complete_and_rerun_identical(tmp_path):
    cfg = dict(experiment="custom", params={"model": "crw", "T": 20, "reps": 300}, seed=9)
    m1 = run_experiment(ExperimentConfig(out=str(tmp_path / "a"), **cfg))
    m2 = run_experiment(ExperimentConfig(out=str(tmp_path / "b"), **cfg))
    doc = _check_manifest(tmp_path / "a")
    assert doc["seeds"] == [9] and doc["version"]
    assert doc["effective_params"]["kappa"] == 1e-4
    assert [f["sha256"] for f in m1.files] == [f["sha256"] for f in m2.files]


def test_format_selection(tmp_path):
    run_experiment(ExperimentConfig("custom", {"T": 8}, str(tmp_path), ("json",)))
    assert {p.name for p in tmp_path.iterdir()} == {"fits.json", "manifest.json"}


def test_crw_serial_parallel_identical(tmp_path):
    cfg = dict(experiment="custom", params={"model": "crw", "T": 20, "reps": 600, "u": -0.1}, seed=2)
    run_experiment(ExperimentConfig(out=str(tmp_path / "s"), workers=1, **cfg))
    run_experiment(ExperimentConfig(out=str(tmp_path / "p"), workers=2, **cfg))
    for name in ("distribution.csv", "variance.csv", "correlation.csv"):
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_bifurcation_serial_parallel_identical(tmp_path):
    params = {"gamma_min": 0.7, "gamma_max": 0.9, "gamma_step": 0.1, "T": 40}
    run_experiment(ExperimentConfig("fig2-bifurcation", params, str(tmp_path / "s"), workers=1))
    run_experiment(ExperimentConfig("fig2-bifurcation", params, str(tmp_path / "p"), workers=2))
    assert (tmp_path / "s" / "peaks.csv").read_bytes() == (tmp_path / "p" / "peaks.csv").read_bytes()
    assert (tmp_path / "s" / "peaks.csv").read_text().splitlines()[0] == "gamma,peak_x"


def test_fig1_output_shape(tmp_path):
    params = {"gammas": [0.0, 1.0]}
    run_experiment(ExperimentConfig("fig1-variance", params, str(tmp_path)))
    with open(tmp_path / "variance.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["gamma", "t", "sigma2"]
    for g in ("0", "1"):
        sub = [r for r in rows if float(r["gamma"]) == float(g)]
        assert [int(r["t"]) for r in sub] == list(range(101))
    fits = json.loads((tmp_path / "fits.json").read_text())
    assert set(fits) == {"gamma=0.0", "gamma=1.0"}
    assert set(fits["gamma=1.0"]) >= {"a", "b", "c", "residual", "window", "converged"}
    assert fits["gamma=1.0"]["a"] == pytest.approx(0.0, abs=1e-9)
    _check_manifest(tmp_path)


def test_fig4_distribution(tmp_path):
    run_experiment(ExperimentConfig("fig4-probdist", {}, str(tmp_path)))
    with open(tmp_path / "distribution.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["lambda", "t", "x", "p"]
    for lam in (0.0, 0.1):
        sub = [r for r in rows if float(r["lambda"]) == lam]
        assert {int(r["t"]) for r in sub} == {60}
        assert len(sub) == 151
        assert math.fsum(float(r["p"]) for r in sub) == pytest.approx(1.0, abs=1e-10)
    odd = [float(r["p"]) for r in rows if float(r["lambda"]) == 0.0 and int(r["x"]) % 2]
    assert max(odd) == 0.0
