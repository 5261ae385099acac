import csv
import json

import numpy as np
import pytest

from dlpd.cli import main
from dlpd.core import DataSet
from dlpd.data_io import read_dataset, write_dataset
from dlpd.exceptions import DataSchemaError
from dlpd.simulation import ModelSpec, sample_dataset

SMALL = ["--model", "M3", "--p", "22", "--n1", "30", "--n2", "30", "--n-test1", "20",
         "--n-test2", "20"]
FAST = ["--n-subsets", "5", "--bandwidth-grid", "0.75,1.5"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def strip_clock(obj):
    if isinstance(obj, dict):
        return {k: strip_clock(v) for k, v in obj.items() if k != "wall_clock_seconds"}
    if isinstance(obj, list):
        return [strip_clock(v) for v in obj]
    return obj


@pytest.fixture
def simulated(tmp_path):
    tr, te = tmp_path / "train.csv", tmp_path / "test.csv"
    assert main(["simulate", *SMALL, "--seed", "3", "--train", str(tr), "--test", str(te)]) == 0
    return tr, te


def test_simulate_shape_and_risk(tmp_path, capsys):
    tr = tmp_path / "m1.csv"
    assert main(["simulate", "--model", "M1", "--p", "50", "--seed", "7", "--train", str(tr)]) == 0
    rows = read_rows(tr)
    assert len(rows) == 201 and all(len(r) == 52 for r in rows)
    assert rows[0][:3] == ["label", "u1", "x1"] and rows[0][-1] == "x50"
    out = capsys.readouterr().out
    risk = float(out.split("R = ")[1].split()[0])
    assert abs(risk - 0.083) <= 0.001


def test_simulate_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["simulate", *SMALL, "--seed", "5", "--train", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_roundtrip_exact(tmp_path):
    ds = sample_dataset(ModelSpec("M4", 21, 15, 15, seed=2))
    path = tmp_path / "d.csv"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert back.equals(ds)
    odd = DataSet([[1e-300, -3.3e200], [np.pi, -0.0]], [[1 / 3], [2 / 3]], ["X", "Y"])
    write_dataset(odd, path)
    assert read_dataset(path).equals(odd)


@pytest.mark.parametrize("content, fragment", [
    ("", "empty"),
    ("label,u1,x1\nX,0.1\n", "line 2: expected 3 fields"),
    ("label,u1,x1\nX,0.1,2\nZ,0.2,1\n", "line 3: label"),
    ("label,u1,x1\nX,0.1,abc\n", "line 2"),
    ("label,x1,u1\nX,0.1,2\n", "line 1"),
    ("label,u1,x2\nX,0.1,2\n", "line 1"),
    ("label,u1,x1\nX,0.1,nan\n", "non-finite"),
])
def test_schema_errors(tmp_path, content, fragment):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(DataSchemaError, match=fragment):
        read_dataset(path)


def test_exit_codes(tmp_path, simulated, capsys):
    tr, te = simulated
    bad = tmp_path / "bad.csv"
    bad.write_text("label,u1,x1\nX,0.1\n")
    assert main(["fit", "--train", str(bad)]) == 3
    assert main(["fit", "--train", str(tmp_path / "missing.csv")]) == 3
    assert main(["fit"]) == 2
    assert main(["simulate", "--model", "M7"]) == 2
    assert main(["simulate", "--p", "10"]) == 2
    assert main(["fit", "--train", str(tr), "--lam", "abc"]) == 2
    # a lambda far below every attainable residual makes the final fit infeasible
    one = tmp_path / "one.csv"
    write_dataset(DataSet([[1.0, 0.0], [-1.0, 0.0]], [[0.5], [0.5]], ["X", "Y"]), one)
    assert main(["fit", "--train", str(one), "--baseline", "lpd", "--lam", "0.1"]) == 4
    assert "numerical failure" in capsys.readouterr().err


def test_fit_predict_evaluate(tmp_path, simulated):
    tr, te = simulated
    model, rep, pred = tmp_path / "m.json", tmp_path / "r.json", tmp_path / "p.csv"
    assert main(["fit", "--train", str(tr), "--model-out", str(model), *FAST]) == 0
    assert main(["predict", "--model", str(model), "--data", str(te), "--out", str(pred)]) == 0
    rows = read_rows(pred)
    assert rows[0] == ["row", "label", "prediction", "score", "status"] and len(rows) == 41
    assert main(["evaluate", "--model", str(model), "--test", str(te), "--report", str(rep),
                 "--oracle-model", "M3", "--u-grid-size", "5"]) == 0
    r = json.loads(rep.read_text())
    assert r["report_version"] == 1 and r["method"] == "dlpd"
    cc = r["class_counts"]
    assert cc["X"]["n"] + cc["Y"]["n"] == r["n_test"] == 40
    assert r["errors"] == cc["X"]["errors"] + cc["Y"]["errors"]
    assert 0 <= r["misclassification_rate"] <= 1
    wrong = sum(row[1] != row[2] for row in rows[1:])
    assert wrong == r["errors"]
    o = r["oracle"]
    assert len(o["u_grid"]) == 5
    assert all(e["plugin_risk"] >= e["bayes_risk"] - 1e-12 for e in o["u_grid"])


def test_knn_resubstitution_error_zero(tmp_path, simulated):
    tr, _ = simulated
    model, rep = tmp_path / "k.json", tmp_path / "k_report.json"
    assert main(["fit", "--train", str(tr), "--baseline", "knn", "--model-out", str(model)]) == 0
    obj = json.loads(model.read_text())
    obj["tuning"]["k"] = 1
    model.write_text(json.dumps(obj))
    assert main(["evaluate", "--model", str(model), "--test", str(tr), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["errors"] == 0


def test_empty_windows_tallied(tmp_path):
    train = DataSet(np.random.default_rng(0).normal(size=(20, 3)),
                    np.r_[np.zeros(10), np.full(10, 0.05)], ["X", "Y"] * 10)
    test = DataSet(np.zeros((3, 3)), [[0.0], [7.0], [0.05]], ["X", "Y", "X"])
    tr, te, rep = tmp_path / "tr.csv", tmp_path / "te.csv", tmp_path / "r.json"
    write_dataset(train, tr)
    write_dataset(test, te)
    assert main(["evaluate", "--train", str(tr), "--test", str(te), "--kernel", "epanechnikov",
                 "--bandwidth", "1", "--lam", "0.5", "--report", str(rep)]) == 0
    r = json.loads(rep.read_text())
    assert r["empty_window_rows"] == [2] and r["unclassified"] == 1
    assert r["class_counts"]["Y"]["errors"] == 1


def test_config_file(tmp_path, simulated, capsys):
    tr, _ = simulated
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tuning\nlam = 0.25\nbandwidth = 1.0\nkernel = epanechnikov\n")
    rep = tmp_path / "fit.json"
    assert main(["fit", "--config", str(cfg), "--train", str(tr), "--report", str(rep)]) == 0
    t = json.loads(rep.read_text())["tuning"]
    assert t["lambda"] == 0.25 and t["kernel"]["kind"] == "epanechnikov"
    # flags override the file
    assert main(["fit", "--config", str(cfg), "--train", str(tr), "--lam", "0.5",
                 "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["tuning"]["lambda"] == 0.5
    cfg.write_text("lam = 0.25\nbandwith = 1\n")
    assert main(["fit", "--config", str(cfg), "--train", str(tr)]) == 2
    assert "unknown key 'bandwith'" in capsys.readouterr().err
    cfg.write_text("kernel = box\n")
    assert main(["fit", "--config", str(cfg), "--train", str(tr)]) == 2


def test_cv_command(tmp_path, simulated):
    tr, _ = simulated
    rep = tmp_path / "cv.json"
    assert main(["cv", "--train", str(tr), "--report", str(rep), *FAST]) == 0
    r = json.loads(rep.read_text())
    assert len(r["bandwidth"]["X"]["scores"]) == 2
    assert r["lambda"]["selected"] in r["lambda"]["grid"]
    assert all(0 <= s <= 60 for s in r["lambda"]["scores"])


def test_plot_data(tmp_path, simulated):
    tr, te = simulated
    plot = tmp_path / "beta.csv"
    assert main(["evaluate", "--train", str(tr), "--test", str(te), "--bandwidth", "1",
                 "--lam", "0.3", "--oracle-model", "M3", "--u-grid-size", "3",
                 "--plot-data", str(plot), "--report", str(tmp_path / "r.json")]) == 0
    rows = read_rows(plot)
    assert rows[0] == ["u1", "coordinate", "value", "series"]
    assert len(rows) == 1 + 3 * 22 * 2
    assert {r[3] for r in rows[1:]} == {"fitted", "true"}


def test_end_to_end_determinism(tmp_path):
    reports = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        assert main(["simulate", *SMALL, "--seed", "11", "--train", str(d / "tr.csv"),
                     "--test", str(d / "te.csv")]) == 0
        assert main(["fit", "--train", str(d / "tr.csv"), "--model-out", str(d / "m.json"),
                     *FAST, "--seed", "4"]) == 0
        assert main(["evaluate", "--model", str(d / "m.json"), "--test", str(d / "te.csv"),
                     "--report", str(d / "r.json")]) == 0
        reports.append(json.loads((d / "r.json").read_text()))
    for name in ("tr.csv", "te.csv", "m.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert strip_clock(reports[0]) == strip_clock(reports[1])


def test_bench_small(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DLPD_THREADS", "1")
    out = tmp_path / "bench"
    assert main(["bench", "--models", "M1", "--ps", "21", "--seeds", "0-1", "--n1", "20",
                 "--n2", "20", "--n-test1", "10", "--n-test2", "10", "--baseline", "lpd,knn",
                 "--out-dir", str(out), *FAST]) == 0
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["threads"] == 1 and agg["methods"] == ["dlpd", "lpd", "knn"]
    row = agg["table"][0]
    assert row["model"] == "M1" and row["n_seeds"] == 2
    assert abs(row["bayes_risk"] - 0.0831) < 1e-3
    assert (out / "M1_p21_seed1.json").exists() and (out / "aggregate.csv").exists()
    assert "dlpd_median" in capsys.readouterr().out


def test_threads_env_invalid(monkeypatch):
    monkeypatch.setenv("DLPD_THREADS", "zero")
    assert main(["bench", "--models", "M1", "--ps", "21", "--seeds", "0"]) == 2
