import csv
import json

import numpy as np
import pytest

from glmdisc.cli import TRACE_HEADER, main
from glmdisc.scorecard import load_model

from conftest import DATA_DIR

GERMAN = DATA_DIR / "german" / "german.csv"
GERMAN_SCHEMA = DATA_DIR / "german" / "schema.json"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def sim_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scenario", "C", "--n", "600", "--seed", "1", "--out", str(d / "sim.csv")]) == 0
    return d / "sim.csv", d / "sim.schema.json"


@pytest.fixture(scope="module")
def fitted(sim_files, tmp_path_factory):
    data, schema = sim_files
    out = tmp_path_factory.mktemp("fit") / "model.json"
    assert main(["fit", "--data", str(data), "--schema", str(schema), "--m-max", "4",
                 "--epochs", "6", "--seed", "2", "--out", str(out)]) == 0
    return out


def test_simulate_writes_schema(sim_files):
    data, schema = sim_files
    rows = read_csv(data)
    assert len(rows) == 600 and set(rows[0]) == {"x1", "x2", "x3", "y"}
    assert json.loads(schema.read_text())["target"] == "y"


def test_fit_reports(fitted, capsys):
    model = load_model(fitted)
    assert model.method == "glmdisc" and model.config.epochs == 6 and model.config.seed == 2


def test_predict(fitted, sim_files, tmp_path):
    data, _ = sim_files
    out = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(fitted), "--data", str(data), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 600 and list(rows[0]) == ["row", "probability"]
    assert all(0 < float(r["probability"]) < 1 for r in rows)


def test_predict_accepts_unlabeled(fitted, sim_files, tmp_path):
    data, _ = sim_files
    lines = data.read_text().splitlines()
    header = lines[0].split(",")
    keep = [i for i, h in enumerate(header) if h != "y"]
    unlabeled = tmp_path / "u.csv"
    unlabeled.write_text("\n".join(",".join(line.split(",")[i] for i in keep) for line in lines[:11]) + "\n")
    assert main(["predict", "--model", str(fitted), "--data", str(unlabeled), "--out", str(tmp_path / "p.csv")]) == 0
    assert len(read_csv(tmp_path / "p.csv")) == 10


def test_predict_unknown_level_names_row(tmp_path, capsys):
    model = tmp_path / "allr.json"
    assert main(["fit", "--data", str(GERMAN), "--schema", str(GERMAN_SCHEMA), "--method", "allr",
                 "--out", str(model)]) == 0
    lines = GERMAN.read_text().splitlines()
    header = lines[0].split(",")
    kinds = json.loads(GERMAN_SCHEMA.read_text())["features"]
    j = header.index(next(name for name, kind in kinds.items() if kind == "categorical"))
    rows = [line.split(",") for line in lines[1:6]]
    rows[3][j] = "never-seen-level"
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join([lines[0]] + [",".join(r) for r in rows]) + "\n")
    out = tmp_path / "p.csv"
    capsys.readouterr()
    assert main(["predict", "--model", str(model), "--data", str(bad), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "row 3" in err and header[j] in err
    assert not out.exists()


def test_export_scorecard(fitted, tmp_path):
    out = tmp_path / "card.csv"
    assert main(["export-scorecard", "--model", str(fitted), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0]["feature"] == "(intercept)"
    assert len(rows) == 1 + sum(load_model(fitted).m_hat)


def test_trace(fitted, tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["trace", "--model-history", str(fitted), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == TRACE_HEADER
    assert len(rows) == 6 * 3
    best = [r for r in rows if r["is_best"] == "1"]
    model = load_model(fitted)
    assert len(best) == 3 and {int(r["epoch"]) for r in best} == {model.best_epoch}
    assert min(float(r["bic"]) for r in rows) == float(best[0]["bic"])


def test_trace_needs_history(tmp_path):
    model = tmp_path / "m.json"
    assert main(["fit", "--data", str(GERMAN), "--schema", str(GERMAN_SCHEMA), "--method", "mdlp-chi2",
                 "--out", str(model)]) == 0
    assert main(["trace", "--model-history", str(model), "--out", str(tmp_path / "t.csv")]) == 1


def test_benchmark(tmp_path, capsys):
    out = tmp_path / "bench.json"
    assert main(["benchmark", "--data", str(GERMAN), "--schema", str(GERMAN_SCHEMA),
                 "--methods", "allr,mdlp-chi2", "--bootstrap", "10", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [r["method"] for r in doc["rows"]] == ["allr", "mdlp-chi2"]
    assert out.with_suffix(".txt").exists()
    assert "allr" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [],
    ["fit", "--data", "x.csv"],
    ["simulate", "--n", "0", "--out", "x.csv"],
    ["benchmark", "--data", "a", "--schema", "b", "--methods", "bogus", "--out", "c"],
    ["benchmark", "--data", "a", "--schema", "b", "--test-frac", "1.5", "--out", "c"],
])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_runtime_errors_exit_1(tmp_path, capsys):
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--schema", str(GERMAN_SCHEMA),
                 "--out", str(tmp_path / "m.json")]) == 1
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "m.json").exists()


def test_simulate_same_seed_identical(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["simulate", "--scenario", "A", "--n", "50", "--seed", "9", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.schema.json").read_bytes() == (tmp_path / "b.schema.json").read_bytes()


def test_fit_recovers_three_levels(tmp_path, capsys):
    data = tmp_path / "a.csv"
    assert main(["simulate", "--scenario", "A", "--n", "10000", "--seed", "0", "--out", str(data)]) == 0
    out = tmp_path / "m.json"
    assert main(["fit", "--data", str(data), "--schema", str(tmp_path / "a.schema.json"),
                 "--m-max", "3", "--out", str(out)]) == 0
    assert load_model(out).m_hat == (3, 3)
    assert "m_hat[x1] = 3" in capsys.readouterr().out


def test_predict_schema_mismatch(fitted, tmp_path):
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(fitted), "--data", str(GERMAN), "--out", str(out)]) == 1
    assert not out.exists()
