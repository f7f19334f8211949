import csv
import json

import numpy as np
import pytest
import yaml

from structsig import io
from structsig.cli import main
from structsig.likelihood import lik

MODEL = {
    "mean": False,
    "components": [
        {"name": "trend", "class": "white-noise", "delta": [1, -1]},
        {"name": "irregular", "class": "white-noise"},
    ],
}


def _write(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def fitted(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    sim = _write(d / "sim.yaml", {"simulate": {"T": 150, "names": ["y"], "seed": 4,
                                               "psi": [-0.69, 0.69]},
                                  "model": MODEL, "output_dir": "sim"})
    assert main(["simulate", "--config", str(sim)]) == 0
    cfg = {"data": {"path": "sim/data.csv", "start": "2001-01-01", "freq": "quarter",
                    "period": 4},
           "model": MODEL, "output_dir": "out",
           "extract": {"signals": [{"name": "trend", "components": ["trend"]},
                                   {"name": "noise", "components": [1]},
                                   {"name": "smooth", "kernel": {"coeffs": [0.25, 0.5, 0.25],
                                                                 "shift": 1}}],
                       "decomposition": {"pieces": ["trend", "noise"],
                                         "cast_error_to": "noise"}}}
    run = _write(d / "run.yaml", cfg)
    assert main(["fit", "--config", str(run)]) == 0
    return d, run


def test_simulate_outputs(fitted):
    d, _ = fitted
    rows = _rows(d / "sim" / "data.csv")
    assert rows[0] == ["t", "y"] and len(rows) == 151
    assert json.loads((d / "sim" / "psi.json").read_text())["seed"] == 4


def test_bundle_round_trip(fitted):
    d, _ = fitted
    b = io.load_bundle(d / "out" / "bundle.json")
    assert np.isclose(lik(b["psi"], b["model"], b["data"]), b["divergence"], rtol=1e-12)
    assert b["hessian"].shape == (2, 2)


def test_bundle_checksum_detects_edits(fitted, tmp_path):
    d, _ = fitted
    raw = json.loads((d / "out" / "bundle.json").read_text())
    raw["data"][3][0] += 1.0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(ValueError, match="checksum"):
        io.load_bundle(p)


def test_diagnose(fitted, capsys):
    d, _ = fitted
    assert main(["diagnose", "--bundle", str(d / "out" / "bundle.json")]) == 0
    rep = json.loads((d / "out" / "diagnostics.json").read_text())
    assert rep["portmanteau"]["lag"] == 16
    assert 0 <= rep["portmanteau"]["p_value"] <= 1
    assert _rows(d / "out" / "residuals.csv")[0] == ["date", "y"]


def test_extract_and_decomposition(fitted):
    d, _ = fitted
    b = str(d / "out" / "bundle.json")
    assert main(["extract", "--bundle", b, "--frf", "--wk-coeffs", "--horizon", "2"]) == 0
    rows = _rows(d / "out" / "signal_trend.csv")
    assert rows[0] == ["date", "y_point", "y_upper", "y_lower"]
    assert rows[1][0] == "2000-07-01" and len(rows) == 155
    dec = _rows(d / "out" / "decomposition.csv")
    data = io.load_bundle(b)["data"][:, 0]
    tot = np.array([[float(v) for v in r[1:3]] for r in dec[1:]]).sum(1)
    np.testing.assert_allclose(tot, data, atol=1e-9 * np.abs(data).max())
    assert (d / "out" / "frf_trend.csv").exists()
    assert (d / "out" / "wkcoef_noise.csv").exists()
    assert (d / "out" / "signal_smooth.csv").exists()


def test_cast(fitted):
    d, _ = fitted
    assert main(["cast", "--bundle", str(d / "out" / "bundle.json"), "--horizon", "3"]) == 0
    rows = _rows(d / "out" / "casts.csv")
    assert len(rows) == 1 + 156


def test_fit_mom_and_refusal(fitted, tmp_path):
    d, run = fitted
    assert main(["fit", "--config", str(run), "--method", "mom",
                 "--out-dir", str(tmp_path)]) == 0
    assert io.load_bundle(tmp_path / "bundle.json")["method"] == "mom"
    cfg = yaml.safe_load(run.read_text())
    cfg["model"]["constraints"] = [[0.5, 1.0, 0.0]]
    cfg["fit"] = {"psi": [0.0, 0.0]}
    cfg["data"]["path"] = str(d / "sim" / "data.csv")
    bad = _write(tmp_path / "bad.yaml", cfg)
    with pytest.raises(SystemExit, match="row 0"):
        main(["fit", "--config", str(bad), "--out-dir", str(tmp_path)])


def test_filters(tmp_path):
    cfg = _write(tmp_path / "f.yaml", {"filters": {"x11": {"period": 12}, "embed": 12}})
    assert main(["filters", "--config", str(cfg), "--grid", "48"]) == 0
    head = (tmp_path / "kernel_trend_embedded.csv").read_text().splitlines()[0]
    assert head == "# m=3, c=1, N=12"
    assert len(_rows(tmp_path / "kernel_frf.csv")) == 50


def test_time_labels_variants():
    assert io.time_labels({"data": {"start": [1999, 11], "period": 12}}, [0, 1, 2])[1] == \
        [[1999, 11], [1999, 12], [2000, 1]]
    assert io.time_labels({}, [3])[1] == [[3]]
    assert io.fmt(np.nan) == "NA" and io.fmt(1 / 3) == "0.333333333333"


def test_ingest_options(tmp_path):
    (tmp_path / "d.csv").write_text("date,a,b\n2000-01-01,1,2\n2000-02-01,NA,4\n"
                                    "2000-03-01,3,8\n")
    cfg = {"_base": str(tmp_path), "data": {"path": "d.csv", "series": ["b"],
                                            "transform": "log", "range": [1, 3]}}
    x, names = io.ingest(cfg)
    assert names == ["b"]
    np.testing.assert_allclose(x[:, 0], np.log([4, 8]))
    cfg["data"] = {"path": "d.csv", "aggregate": True}
    x, names = io.ingest(cfg)
    assert names == ["a+b"] and np.isnan(x[1, 0])
