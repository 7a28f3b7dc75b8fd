import json

import numpy as np
import pytest

from flr.cli import main
from flr.estimator import SlopeEstimate


def test_quadrature(tmp_path, capsys):
    out = tmp_path / "q.json"
    assert main(["quadrature", "--alpha", "2", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["slope"] <= -1.3 and d["pass_"]


def test_filter_audit(capsys):
    assert main(["filter-audit", "--filters", "tr;itr:s=2"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["pass"]


def test_packing(capsys):
    assert main(["packing", "--J", "16", "--N", "1024"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert len(d["codewords"]) >= 8
    assert d["max_kl"] <= d["kl_bound"]
    assert d["separation_lower"] >= d["separation_bound"]
    assert d["fano"][0]["ratio"] < 1


def test_simulate_then_fit(tmp_path):
    data, grid, est = tmp_path / "d.csv", tmp_path / "g.csv", tmp_path / "e.json"
    assert main(["simulate", "--m", "16", "--J", "6", "--n", "64", "--data", str(data),
                 "--grid", str(grid), "--truth", str(tmp_path / "t.json")]) == 0
    assert main(["fit", "--data", str(data), "--grid", str(grid), "--lambda", "0.1",
                 "--M", "4", "--out", str(est)]) == 0
    e = SlopeEstimate.from_json(est.read_text())
    assert e.grid.m == 16 and np.all(np.isfinite(e.coeffs))


def test_rates_with_config(tmp_path, capsys):
    cfg = {"alpha": 2, "theta": 1.0, "filter": "tr", "N_list": [64, 128, 256, 512, 1024],
           "trials": 2, "J": 8, "M_cap": 2}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    out = tmp_path / "run"
    assert main(["rates", "--config", str(tmp_path / "cfg.json"), "--seed", "5", "--out", str(out)]) == 0
    assert "estimation_W: slope" in capsys.readouterr().out
    assert (out / "rates_estimation_W.csv").exists() and (out / "rates_prediction_risk.json").exists()
    assert json.loads((out / "config.json").read_text())["seed"] == 5


def test_partition_sweep(tmp_path):
    out = tmp_path / "p.json"
    assert main(["partition-sweep", "--alpha", "2", "--filter", "tr", "--J", "8", "--trials", "2",
                 "--N", "64,128,256,512,1024", "--M-list", "1,2,1024", "--at-N", "1024", "--out", str(out)]) == 0
    assert [r["M"] for r in json.loads(out.read_text())["rows"]] == [1, 2, 1024]


def test_error_exit(capsys):
    assert main(["rates", "--theta", "2", "--filter", "tr"]) == 2
    assert "qualification" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["nope"])
