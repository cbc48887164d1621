import json

import numpy as np
import pytest

from robustenet import dataio
from robustenet.errors import InvalidDataError
from robustenet.simdata import generate_good_leverage_example


def test_csv_round_trip(tmp_path, rng):
    X = rng.standard_normal((11, 4))
    y = rng.standard_normal(11)
    path = tmp_path / "d.csv"
    dataio.write_dataset_csv(path, X, y)
    X2, y2 = dataio.read_dataset_csv(path)
    # repr floats survive the trip bit-exactly
    assert np.array_equal(X, X2)
    assert np.array_equal(y, y2)


def test_csv_header_layout(tmp_path, rng):
    path = tmp_path / "d.csv"
    dataio.write_dataset_csv(path, rng.standard_normal((3, 2)), np.arange(3.0))
    head = path.read_text().splitlines()[0]
    assert head == "y,x1,x2"


def test_csv_error_messages_carry_line_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,x1\n1.0,2.0\n3.0\n")
    with pytest.raises(InvalidDataError, match="line 3"):
        dataio.read_dataset_csv(p)
    p.write_text("y,x1\n1.0,abc\n")
    with pytest.raises(InvalidDataError, match="line 2"):
        dataio.read_dataset_csv(p)
    p.write_text("y,x1\n1.0,nan\n")
    with pytest.raises(InvalidDataError, match="line 2"):
        dataio.read_dataset_csv(p)
    p.write_text("y\n1.0\n")
    with pytest.raises(InvalidDataError, match="line 1"):
        dataio.read_dataset_csv(p)
    p.write_text("")
    with pytest.raises(InvalidDataError, match="empty"):
        dataio.read_dataset_csv(p)
    p.write_text("y,x1\n")
    with pytest.raises(InvalidDataError, match="no data rows"):
        dataio.read_dataset_csv(p)


def test_csv_skips_blank_lines(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y,x1\n1.0,2.0\n\n3.0,4.0\n")
    X, y = dataio.read_dataset_csv(p)
    assert y.tolist() == [1.0, 3.0]
    assert X.ravel().tolist() == [2.0, 4.0]


def test_json_sorted_keys_and_nan_handling(tmp_path):
    p = tmp_path / "m.json"
    dataio.write_json(p, {"b": 1.5, "a": float("nan"), "c": np.float64(2.0), "d": float("inf")})
    text = p.read_text()
    assert text.endswith("\n")
    got = json.loads(text)
    assert got == {"a": None, "b": 1.5, "c": 2.0, "d": None}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')


def test_json_serializes_arrays_and_dataclasses(tmp_path):
    from dataclasses import dataclass

    @dataclass
    class Box:
        v: np.ndarray
        k: int

    p = tmp_path / "m.json"
    dataio.write_json(p, {"box": Box(v=np.array([1.0, 2.0]), k=np.int64(3))})
    assert json.loads(p.read_text()) == {"box": {"v": [1.0, 2.0], "k": 3}}


def test_json_rejects_unknown_types(tmp_path):
    with pytest.raises(TypeError):
        dataio.write_json(tmp_path / "m.json", {"x": object()})


def test_truth_sidecar_format(tmp_path):
    d = generate_good_leverage_example(seed=1, knob=9.0)
    p = tmp_path / "t.json"
    dataio.write_truth_json(p, d)
    got = json.loads(p.read_text())
    assert got["format"] == dataio.FORMAT_TRUTH
    assert got["version"]
    assert got["true_coef"] == d.true_coef.tolist()
    assert got["contaminated_rows"] == d.contaminated_rows.tolist()
    assert got["true_scale"] == pytest.approx(d.true_scale)
    assert "created_at" not in got


def test_metrics_file_format(tmp_path):
    p = tmp_path / "m.json"
    dataio.write_metrics_json(p, {"mcc": 0.5, "tau": float("nan")})
    got = json.loads(p.read_text())
    assert got["format"] == dataio.FORMAT_METRICS
    assert got["mcc"] == 0.5
    assert got["tau"] is None


def test_fit_report_payload_shape(tmp_path):
    from robustenet.cv import CvConfig, fit_s_enet_cv

    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 6))
    y = X[:, 0] * 2.0 + rng.standard_normal(60)
    fit = fit_s_enet_cv(X, y, CvConfig(n_reps=2, n_lambdas=8, alphas=(1.0,), seed=1))
    p = tmp_path / "fit.json"
    dataio.write_fit_report(p, fit)
    got = json.loads(p.read_text())
    assert got["format"] == dataio.FORMAT_FIT
    assert got["method"] == "senet"
    assert len(got["coef"]) == 6
    assert got["selected"]["lam"] == pytest.approx(fit.lam)
    assert len(got["cv_surface"]) == len(fit.entries)
    assert "created_at" not in got
    surf = got["cv_surface"][0]
    assert {"alpha", "lam", "mean", "se", "n_active"} <= set(surf)
    # byte-identical on rewrite
    p2 = tmp_path / "fit2.json"
    dataio.write_fit_report(p2, fit)
    assert p.read_bytes() == p2.read_bytes()


def test_read_json_round_trip(tmp_path):
    p = tmp_path / "x.json"
    dataio.write_json(p, {"k": [1, 2, 3]})
    assert dataio.read_json(p) == {"k": [1, 2, 3]}
