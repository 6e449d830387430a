import csv
import subprocess
import sys
import time

import numpy as np
import pytest

from survsplit.cli import main
from survsplit.data import SurvivalDataset, write_csv
from survsplit.forest import load_model, predict_curve

FIXTURE = SurvivalDataset(
    np.array([[0.1, 5.0], [0.4, 3.0], [0.2, 1.0], [0.9, 2.0], [0.5, 4.0],
              [0.3, 0.5], [0.8, 2.5], [0.7, 1.5], [0.6, 3.5], [0.05, 4.5]]),
    np.array([1.0, 2.0, 2.5, 3.0, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0]),
    np.array([1, 1, 0, 1, 1, 0, 1, 1, 0, 1]),
    ("age", "dose"),
)
TRAIN_FLAGS = ["--trees", "5", "--min-node-size", "2", "--seed", "3", "--threads", "1"]


@pytest.fixture
def csv_path(tmp_path):
    path = tmp_path / "train.csv"
    write_csv(FIXTURE, path)
    return path


def _train(csv_path, out, *extra):
    return main(["train", "--data", str(csv_path), "--out", str(out), *TRAIN_FLAGS, *extra])


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_train_smoke(csv_path, tmp_path, capsys):
    out = tmp_path / "m.json"
    assert _train(csv_path, out) == 0
    assert "n=10, p=2" in capsys.readouterr().out
    model = load_model(out)
    assert len(model.trees) == 5
    assert predict_curve(model, [0.5, 2.0]).values.size == model.global_grid.size


def test_train_determinism(csv_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    _train(csv_path, a)
    _train(csv_path, b, "--threads", "2")
    assert a.read_bytes() == b.read_bytes()
    assert load_model(a).fingerprint == load_model(b).fingerprint


@pytest.mark.parametrize("argv", [
    ["train", "--data", "x.csv", "--out", "m.json", "--split-rule", "bogus"],
    ["train", "--data", "x.csv", "--out", "m.json", "--no-such-flag"],
    ["predict", "--model", "m.json"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_predict_full_curves_match_api(csv_path, tmp_path):
    model_path, out = tmp_path / "m.json", tmp_path / "pred.csv"
    _train(csv_path, model_path)
    assert main(["predict", "--model", str(model_path), "--data", str(csv_path),
                 "--out", str(out)]) == 0
    rows = _read_csv(out)
    model = load_model(model_path)
    assert len(rows[0]) == 1 + model.global_grid.size
    assert len(rows) == 1 + FIXTURE.n
    for i, row in enumerate(rows[1:]):
        expected = predict_curve(model, FIXTURE.covariates[i]).values
        assert [float(v) for v in row[1:]] == list(expected)


def test_predict_horizon_before_first_failure(csv_path, tmp_path):
    model_path, out = tmp_path / "m.json", tmp_path / "pred.csv"
    _train(csv_path, model_path)
    assert main(["predict", "--model", str(model_path), "--data", str(csv_path),
                 "--out", str(out), "--horizon", "0.5"]) == 0
    rows = _read_csv(out)
    assert len(rows[0]) == 2
    assert all(float(r[1]) == 1.0 for r in rows[1:])


def test_predict_mismatch_writes_nothing(csv_path, tmp_path, capsys):
    model_path, out = tmp_path / "m.json", tmp_path / "pred.csv"
    _train(csv_path, model_path)
    narrow = tmp_path / "narrow.csv"
    narrow.write_text("age,time,event\n0.1,1,1\n")
    code = main(["predict", "--model", str(model_path), "--data", str(narrow),
                 "--out", str(out)])
    assert code == 1
    assert "error" in capsys.readouterr().err
    assert not out.exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["m.json", "narrow.csv", "train.csv"]


def test_train_bad_data_writes_nothing(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,time,event\n0.1,1,1\n0.2,oops,0\n")
    out = tmp_path / "m.json"
    assert main(["train", "--data", str(bad), "--out", str(out)]) == 1
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--out", str(out)]) == 1
    assert not out.exists()


def test_evaluate_oob_and_test_set(csv_path, tmp_path, capsys):
    model_path = tmp_path / "m.json"
    _train(csv_path, model_path)
    capsys.readouterr()
    assert main(["evaluate", "--model", str(model_path), "--data", str(csv_path)]) == 0
    assert "OOB PE_C" in capsys.readouterr().out
    other = tmp_path / "other.csv"
    write_csv(FIXTURE.subset(np.arange(8)), other)
    assert main(["evaluate", "--model", str(model_path), "--data", str(other)]) == 0
    assert "test PE_C" in capsys.readouterr().out


def test_parity_one_rep_csv(tmp_path, capsys):
    out = tmp_path / "parity.csv"
    argv = ["parity", "--reps", "1", "--n", "200", "--p", "3", "--trees", "5",
            "--threads", "1", "--format", "csv", "--out", str(out)]
    assert main(argv) == 0
    rows = _read_csv(out)
    assert rows[0][:5] == ["rep", "seed", "err_exact", "err_approx", "delta"]
    assert len(rows) == 2
    assert capsys.readouterr().out.splitlines()[0].startswith("rep,seed")


def test_parity_rmse_markdown(capsys):
    argv = ["parity", "--kind", "rmse", "--reps", "1", "--n", "200", "--p", "3",
            "--trees", "5", "--threads", "1"]
    assert main(argv) == 0
    assert "| delta PE_RMSE | 1 |" in capsys.readouterr().out


def test_bench_quick_under_two_minutes(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    t0 = time.perf_counter()
    assert main(["bench", "--quick", "--format", "csv", "--out", str(out)]) == 0
    assert time.perf_counter() - t0 < 120
    rows = _read_csv(out)
    assert len(rows) == 2 and rows[1][:2] == ["20000", "25"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "survsplit", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("train", "predict", "evaluate", "bench", "parity"):
        assert cmd in res.stdout
