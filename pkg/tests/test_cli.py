import csv
import json

import numpy as np
import pytest

from reluctant_gam.cli import main
from reluctant_gam.data import Dataset, write_dataset_csv


def make_train_csv(path, seed=0, n=90, p=12):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, size=(n, p))
    mu = x[:, 0] + 1.5 * (5 * x[:, 1] ** 3 - 3 * x[:, 1])
    y = mu + 0.5 * rng.standard_normal(n)
    write_dataset_csv(Dataset(x=x, y=y, family="gaussian"), str(path))
    return x, y


def read_csv_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_usage_errors_exit_1(tmp_path, capsys):
    train = tmp_path / "t.csv"
    make_train_csv(train)
    assert main([]) == 1  # no subcommand prints help
    assert main(["fit", str(train), "--out", str(tmp_path / "m.json"), "--df", "1"]) == 1
    assert main(["fit", str(train), "--out", str(tmp_path / "m.json"),
                 "--family", "gamma"]) == 1
    assert main(["fit", str(train), "--out", str(tmp_path / "m.json"),
                 "--init-nz", "a,b"]) == 1
    assert main(["fit", str(train), "--no-such-flag"]) == 1
    assert main(["--from-manifest"]) == 1
    capsys.readouterr()


def test_data_errors_exit_2(tmp_path, capsys):
    assert main(["fit", str(tmp_path / "absent.csv"),
                 "--out", str(tmp_path / "m.json")]) == 2
    bad = tmp_path / "bad_model.json"
    bad.write_text(json.dumps({"schema_version": "999"}))
    pred = tmp_path / "p.csv"
    train = tmp_path / "t.csv"
    make_train_csv(train)
    assert main(["predict", str(bad), str(train), "--out", str(pred),
                 "--lambda-index", "0"]) == 2
    assert main(["predict", str(tmp_path / "no_model.json"), str(train),
                 "--out", str(pred), "--lambda-index", "0"]) == 2
    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text("{not json")
    assert main(["predict", str(corrupt), str(train), "--out", str(pred),
                 "--lambda-index", "0"]) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "Traceback" not in err


def test_fit_predict_report_consistency(tmp_path, capsys):
    train = tmp_path / "train.csv"
    x, y = make_train_csv(train, seed=1)
    out = tmp_path / "model.json"
    code = main(["fit", str(train), "--out", str(out), "--seed", "7",
                 "--nlambda", "40"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "gamma=0.6" in stdout  # default init_nz=all resolves to 0.6
    report = tmp_path / "model.report.csv"
    manifest = tmp_path / "model.json.manifest.json"
    assert out.exists() and report.exists() and manifest.exists()

    rows = read_csv_rows(report)
    assert rows[0] == ["lambda", "deviance", "nonzero_linear", "nonzero_nonlinear"]
    assert len(rows) == 41
    idx = 20
    pred_out = tmp_path / "pred.csv"
    code = main(["predict", str(out), str(train), "--out", str(pred_out),
                 "--lambda-index", str(idx), "--response-column", "y"])
    assert code == 0
    captured = capsys.readouterr()
    assert "columns are matched by position" not in captured.err
    preds = np.array([float(r[0]) for r in read_csv_rows(pred_out)[1:]])
    # the report deviance at that index is the training mean squared error
    dev = float(np.mean((y - preds) ** 2))
    assert dev == pytest.approx(float(rows[idx + 1][1]), rel=1e-8)


def test_fit_sel_variant_gamma_line(tmp_path, capsys):
    train = tmp_path / "train.csv"
    make_train_csv(train, seed=2)
    out = tmp_path / "sel.json"
    assert main(["fit", str(train), "--out", str(out), "--seed", "3",
                 "--init-nz", "none", "--nlambda", "30"]) == 0
    assert "gamma=0.8" in capsys.readouterr().out


def test_generated_seed_is_printed_and_recorded(tmp_path, capsys):
    train = tmp_path / "train.csv"
    make_train_csv(train, seed=3)
    out = tmp_path / "m.json"
    assert main(["fit", str(train), "--out", str(out), "--nlambda", "25"]) == 0
    stdout = capsys.readouterr().out
    line = next(l for l in stdout.splitlines() if l.startswith("generated seed:"))
    seed = int(line.split(":", 1)[1])
    manifest = json.loads((tmp_path / "m.json.manifest.json").read_text())
    assert manifest["seed"] == seed
    assert manifest["arguments"]["seed"] == seed


def test_manifest_replay_is_bit_identical(tmp_path, capsys):
    train = tmp_path / "train.csv"
    make_train_csv(train, seed=4)
    out = tmp_path / "m.json"
    assert main(["fit", str(train), "--out", str(out), "--seed", "11",
                 "--nlambda", "30"]) == 0
    first = out.read_bytes()
    manifest = tmp_path / "m.json.manifest.json"
    assert main(["--from-manifest", str(manifest)]) == 0
    assert out.read_bytes() == first
    capsys.readouterr()


def test_predict_lambda_value_selection(tmp_path, capsys):
    train = tmp_path / "train.csv"
    make_train_csv(train, seed=5)
    out = tmp_path / "m.json"
    assert main(["fit", str(train), "--out", str(out), "--seed", "2",
                 "--nlambda", "30"]) == 0
    rows = read_csv_rows(tmp_path / "m.report.csv")
    exact = rows[4][0]  # a value that is on the path
    capsys.readouterr()
    pred = tmp_path / "p.csv"
    assert main(["predict", str(out), str(train), "--out", str(pred),
                 "--response-column", "y", "--lambda", exact]) == 0
    assert "not on the path" not in capsys.readouterr().err
    assert main(["predict", str(out), str(train), "--out", str(pred),
                 "--response-column", "y", "--lambda", "0.123456"]) == 0
    assert "using nearest value" in capsys.readouterr().err
    # selector flags are mutually exclusive, and one is required
    assert main(["predict", str(out), str(train), "--out", str(pred),
                 "--response-column", "y", "--lambda", "0.1",
                 "--lambda-index", "3"]) == 1
    assert main(["predict", str(out), str(train), "--out", str(pred),
                 "--response-column", "y"]) == 1
    assert main(["predict", str(out), str(train), "--out", str(pred),
                 "--response-column", "y", "--lambda-index", "99"]) == 1
    capsys.readouterr()


def test_cv_subcommand_and_cv_driven_predict(tmp_path, capsys):
    train = tmp_path / "train.csv"
    make_train_csv(train, seed=6)
    cv_out = tmp_path / "cv.json"
    assert main(["cv", str(train), "--out", str(cv_out), "--seed", "13",
                 "--method", "rgam", "--nlambda", "25"]) == 0
    payload = json.loads(cv_out.read_text())
    assert payload["method"] == "rgam"
    assert 0 <= payload["lambda_1se_index"] <= payload["lambda_min_index"]
    assert (tmp_path / "cv.csv").exists()
    model_path = tmp_path / "cv.model.json"
    assert model_path.exists()
    pred = tmp_path / "p.csv"
    assert main(["predict", str(model_path), str(train), "--out", str(pred),
                 "--response-column", "y", "--cv-result", str(cv_out),
                 "--rule", "1se"]) == 0
    n_rows = len(read_csv_rows(pred)) - 1
    assert n_rows == 90
    capsys.readouterr()


def test_cv_lasso_writes_no_model_json(tmp_path, capsys):
    train = tmp_path / "train.csv"
    make_train_csv(train, seed=7)
    cv_out = tmp_path / "cvl.json"
    assert main(["cv", str(train), "--out", str(cv_out), "--seed", "3",
                 "--method", "lasso", "--nlambda", "25"]) == 0
    assert not (tmp_path / "cvl.model.json").exists()
    assert (tmp_path / "cvl.csv").exists()
    capsys.readouterr()


def test_dof_json_and_append_csv(tmp_path, capsys):
    out = tmp_path / "dof.json"
    log = tmp_path / "dof_log.csv"
    args = ["dof", "--fitter", "ols", "--n", "25", "--p", "3", "--b", "60",
            "--seed", "5", "--out", str(out), "--append-csv", str(log)]
    assert main(args) == 0
    payload = json.loads(out.read_text())
    # least squares with intercept on 3 features: trace is 4
    assert abs(payload["df_hat"] - 4.0) < 4 * payload["standard_error"]
    assert payload["fitter"] == "ols" and payload["B"] == 60
    assert main(args) == 0  # append a second row
    rows = read_csv_rows(log)
    assert rows[0][0] == "fitter" and len(rows) == 3
    assert rows[1] == rows[2]  # same seed, same estimate
    capsys.readouterr()


def test_bench_summarize_and_replay(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    args = ["bench", "--scenarios", "linear", "--methods", "null,lasso",
            "--replicates", "2", "--snrs", "2.0", "--n-test", "300",
            "--seed", "9", "--out", str(out)]
    assert main(args) == 0
    rows = read_csv_rows(out)
    assert len(rows) == 1 + 2 * 2  # header + methods x replicates
    assert rows[0][0] == "scenario"
    first = out.read_bytes()
    assert main(["--from-manifest", str(tmp_path / "bench.csv.manifest.json")]) == 0
    assert out.read_bytes() == first
    summary = tmp_path / "summary.csv"
    assert main(["summarize", str(out), "--out", str(summary)]) == 0
    srows = read_csv_rows(summary)
    assert len(srows) == 1 + 2  # one row per (scenario, snr, method)
    assert main(["bench", "--scenarios", "weird", "--out", str(out)]) == 1
    capsys.readouterr()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "rgam" in capsys.readouterr().out
