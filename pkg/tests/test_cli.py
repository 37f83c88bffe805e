import json

import numpy as np
import pytest
import yaml

from drrd.cli import main
from drrd.core import Dataset
from drrd.dataio import SIMULATE_CSV_COLUMNS, write_csv_dataset


@pytest.fixture
def indicator_csv(tmp_path, indicator_data):
    p = tmp_path / "ind.csv"
    write_csv_dataset(indicator_data, p)
    return p


def _config(tmp_path, data):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(data))
    return p


def test_estimate_indicator(tmp_path, indicator_csv):
    cfg = _config(tmp_path, {"rd": {"first_stage": {"kind": "constant_mean"}}, "csv": {"path": str(indicator_csv)}})
    out = tmp_path / "rep.json"
    assert main(["--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["tau_hat"] == 1.0
    assert rep["config"]["rd"]["first_stage"]["kind"] == "constant_mean"
    assert rep["n_treated"] == 4 and rep["n_control"] == 4


def test_estimate_report_recomposes(tmp_path, rng):
    w = rng.uniform(-1, 1, 300)
    ds = Dataset(np.where(w >= 0, 1.0, 0.0) + w + rng.normal(0, 0.3, 300), w)
    data = tmp_path / "d.csv"
    write_csv_dataset(ds, data)
    out = tmp_path / "rep.json"
    assert main(["--data", str(data), "--out", str(out), "--bootstrap", "100", "--seed", "3"]) == 0
    rep = json.loads(out.read_text())
    recomposed = (rep["eta_hat"]["treated"] + rep["plugin_mean"]["treated"]) - (
        rep["eta_hat"]["control"] + rep["plugin_mean"]["control"]
    )
    assert abs(rep["tau_hat"] - recomposed) < 1e-12
    assert rep["ci"][0] <= rep["tau_hat"] <= rep["ci"][1]
    assert rep["seed"] == 3 and rep["config"]["bootstrap"]["reps"] == 100


def test_estimate_one_sided_exit_1(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("y,w\n1,0.5\n2,0.7\n3,0.9\n")
    assert main(["--data", str(data)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "EmptySide"


def test_pretty_errors(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("y,w\n1,0.5\n2,oops\n")
    assert main(["--data", str(data), "--pretty"]) == 1
    assert "UnparseableValue" in capsys.readouterr().err


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main([]) == 2
    with pytest.raises(SystemExit) as info:
        main(["--format", "xml"])
    assert info.value.code == 2
    assert main(["--config", str(tmp_path / "missing.yaml")]) == 2


def _sim_cfg(tmp_path, **over):
    data = {
        "mode": "simulate",
        "rd": {"bandwidth": {"rule": "fixed", "h": 0.5}, "first_stage": {"kind": "polynomial_sieve", "degree_w": 1}},
        "scenario": {"dgp": {"catalog": "LinearJump", "noise_sd": 0.0}, "n_grid": [100, 400], "reps": 50},
        "seed": 5,
    }
    data.update(over)
    return _config(tmp_path, data)


def test_simulate_zero_noise(tmp_path):
    out = tmp_path / "sim.json"
    assert main(["--config", str(_sim_cfg(tmp_path)), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert all(abs(r["bias"]) < 1e-8 for r in rep["rows"])
    assert rep["seed"] == 5 and rep["config"]["scenario"]["dgp"]["name"] == "LinearJump"


def test_simulate_byte_identical_and_csv(tmp_path):
    cfg = _sim_cfg(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--config", str(cfg), "--out", str(a), "--format", "csv"]) == 0
    assert main(["--config", str(cfg), "--out", str(b), "--format", "csv"]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0].split(",")
    assert tuple(header) == SIMULATE_CSV_COLUMNS


def test_seed_flag_overrides(tmp_path):
    cfg = _sim_cfg(tmp_path, scenario={"dgp": "LinearJump", "n_grid": [200], "reps": 50})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["--config", str(cfg), "--out", str(a), "--seed", "1"])
    main(["--config", str(cfg), "--out", str(b), "--seed", "2"])
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ra["seed"] == 1 and rb["seed"] == 2
    assert ra["rows"][0]["bias"] != rb["rows"][0]["bias"]


def test_stdout_default(tmp_path, capsys, indicator_csv):
    assert main(["--data", str(indicator_csv), "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("method,tau_hat,")
