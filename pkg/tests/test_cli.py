import json
import os
import subprocess
import sys

import numpy as np
import pytest

from robustenet import cli, dataio

QUICK_CV = [
    "--reps", "2", "--lambdas", "8", "--alphas", "1.0", "--exponents", "1.0",
    "--seed", "1",
]


def _run_main(argv):
    return cli.main(argv)


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "train.csv"
    code = _run_main([
        "simulate", "--scenario", "good-leverage", "--seed", "2",
        "--out", str(out),
    ])
    assert code == 0
    return out


def test_parser_covers_subcommands():
    parser = cli.build_parser()
    extras = {
        "fit": ["--data", "d"],
        "path": ["--data", "d"],
        "simulate": [],
        "evaluate": ["--report", "r", "--truth", "t"],
        "reproduce": ["--figure", "good-leverage"],
    }
    for sub, extra in extras.items():
        ns = parser.parse_args([sub, "--out", "x"] + extra)
        assert ns.command == sub


def test_simulate_writes_dataset_and_truth(tmp_path):
    out = tmp_path / "d.csv"
    code = _run_main([
        "simulate", "--scenario", "one", "--n", "50", "--p", "16",
        "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    X, y = dataio.read_dataset_csv(out)
    assert X.shape == (50, 16)
    truth = json.loads((tmp_path / "d.csv.truth.json").read_text())
    assert truth["format"] == "robustenet/truth"
    assert len(truth["true_coef"]) == 16


def test_simulate_custom_truth_path(tmp_path):
    out = tmp_path / "d.csv"
    sidecar = tmp_path / "other.json"
    code = _run_main([
        "simulate", "--scenario", "alternative", "--seed", "0",
        "--truth", str(sidecar), "--out", str(out),
    ])
    assert code == 0
    assert sidecar.exists()


def test_fit_then_evaluate_pipeline(tmp_path, dataset):
    report = tmp_path / "fit.json"
    code = _run_main([
        "fit", "--data", str(dataset), "--method", "adaptive-senet",
        "--out", str(report), *QUICK_CV,
    ])
    assert code == 0
    rep = json.loads(report.read_text())
    assert rep["method"] == "adaptive-senet"
    assert rep["format"] == "robustenet/fit-report"

    metrics = tmp_path / "m.json"
    code = _run_main([
        "evaluate", "--report", str(report),
        "--truth", str(dataset) + ".truth.json", "--out", str(metrics),
    ])
    assert code == 0
    got = json.loads(metrics.read_text())
    assert {"mcc", "sensitivity", "specificity", "specificity_contaminated"} <= set(got)


def test_evaluate_with_test_data_and_reference(tmp_path, dataset):
    report = tmp_path / "fit.json"
    assert _run_main([
        "fit", "--data", str(dataset), "--method", "senet",
        "--out", str(report), *QUICK_CV,
    ]) == 0
    test_csv = tmp_path / "test.csv"
    assert _run_main([
        "simulate", "--scenario", "good-leverage", "--seed", "9",
        "--clean", "--leverage", "1.0", "--out", str(test_csv),
    ]) == 0
    m1 = tmp_path / "m1.json"
    assert _run_main([
        "evaluate", "--report", str(report), "--truth", str(dataset) + ".truth.json",
        "--test-data", str(test_csv), "--out", str(m1),
    ]) == 0
    got = json.loads(m1.read_text())
    assert {"tau", "rmse", "tau_ratio"} <= set(got)

    ref = tmp_path / "ref.json"
    assert _run_main([
        "fit", "--data", str(dataset), "--method", "adaptive-senet",
        "--out", str(ref), *QUICK_CV,
    ]) == 0
    m2 = tmp_path / "m2.json"
    assert _run_main([
        "evaluate", "--report", str(report), "--truth", str(dataset) + ".truth.json",
        "--test-data", str(test_csv), "--reference", str(ref), "--out", str(m2),
    ]) == 0
    got2 = json.loads(m2.read_text())
    assert "rpp" in got2 and "rpp_rmse" in got2


def test_path_subcommand(tmp_path, dataset):
    out = tmp_path / "path.json"
    code = _run_main([
        "path", "--data", str(dataset), "--alpha", "0.75",
        "--lambdas", "6", "--out", str(out),
    ])
    assert code == 0
    got = json.loads(out.read_text())
    assert got["format"] == "robustenet/path"
    assert len(got["lambdas"]) == 6
    assert len(got["fits"]) == 6


def test_fit_rejects_bad_method(dataset, tmp_path):
    parser = cli.build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args([
            "fit", "--data", str(dataset), "--method", "ols",
            "--out", str(tmp_path / "x.json"),
        ])


def test_exit_code_invalid_parameter(tmp_path, dataset):
    code = _run_main([
        "fit", "--data", str(dataset), "--method", "senet",
        "--alphas", "0.0", "--out", str(tmp_path / "x.json"),
    ])
    assert code == 2


def test_exit_code_invalid_data(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x1\n1.0,oops\n")
    code = _run_main([
        "fit", "--data", str(bad), "--method", "senet",
        "--out", str(tmp_path / "x.json"),
    ])
    assert code == 3


def test_exit_code_exact_fit(tmp_path, rng):
    X = rng.standard_normal((30, 3))
    const = tmp_path / "const.csv"
    dataio.write_dataset_csv(const, X, np.full(30, 1.0))
    code = _run_main([
        "fit", "--data", str(const), "--method", "senet",
        "--out", str(tmp_path / "x.json"), *QUICK_CV,
    ])
    assert code == 4


def test_reproduce_good_leverage_rows(tmp_path):
    out = tmp_path / "rows.csv"
    code = _run_main([
        "reproduce", "--figure", "good-leverage", "--seeds", "1",
        "--methods", "senet", "--out", str(out), *QUICK_CV,
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "method,p,nu,contamination,seed,metric,value"
    metrics = {line.split(",")[5] for line in lines[1:]}
    assert {"mcc", "sensitivity", "specificity", "specificity-contaminated"} <= metrics
    side = json.loads((tmp_path / "rows.csv.config.json").read_text())
    assert side["figure"] == "good-leverage"


def test_reproduce_rejects_unknown_method(tmp_path):
    code = _run_main([
        "reproduce", "--figure", "good-leverage", "--methods", "magic",
        "--out", str(tmp_path / "rows.csv"),
    ])
    assert code == 2


def test_cli_entry_point_subprocess(tmp_path):
    # the console entry must set the thread env var before importing numba
    out = tmp_path / "d.csv"
    proc = subprocess.run(
        [
            sys.executable, "-m", "robustenet.cli", "simulate",
            "--scenario", "one", "--n", "30", "--p", "8",
            "--threads", "2", "--out", str(out),
        ],
        capture_output=True, text=True,
        env={**os.environ, "PYTHONPATH": ""},
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
