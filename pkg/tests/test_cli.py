import csv
import json
import math

import pytest

from bhdisorder import cli
from bhdisorder import oracle


def run(tmp_path, argv, config=None):
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        argv = argv + ["--config", str(path)]
    return cli.main(argv + ["--out", str(tmp_path / "out"), "--jobs", "1"])


def read_csv(path):
    lines = path.read_text().splitlines()
    head = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    return head, rows


SMALL = {"format_version": 1, "model": {"interaction": "hardcore"},
         "disorder": {"kind": "bernoulli", "p": 0.5, "eps": 1.9},
         "sweep": {"rho_min": 0.3, "rho_max": 0.5, "points": 3}}


def test_curve_outputs(tmp_path):
    assert run(tmp_path, ["curve"], SMALL) == 0
    out = tmp_path / "out"
    head, rows = read_csv(out / "curve.csv")
    assert head[0] == "# format_version=1"
    cfg = json.loads(head[1][len("# config="):])
    assert cfg["curves"][0]["sweep"]["beta_max"] == 500.0
    assert rows[0] == ["rho", "beta_c", "mu_c", "status", "n_roots"]
    assert [r[0] for r in rows[1:]] == ["0.3", "0.4", "0.5"]
    assert float(rows[-1][1]) == pytest.approx(4 / 1.9 * math.atanh(0.95), abs=1e-8)
    doc = json.loads((out / "curve.json").read_text())
    assert doc["format_version"] == 1 and doc["failed_rho"] == []
    assert doc["solver"]["mode"] == "hardcore"
    assert "plot 'curve.csv'" in (out / "curve.gp").read_text()


def test_divergent_points(tmp_path):
    cfg = dict(SMALL, disorder={"kind": "bernoulli", "p": 0.5, "eps": 3.0},
               sweep={"rho_min": 0.5, "rho_max": 0.5, "points": 1})
    assert run(tmp_path, ["curve"], cfg) == 0
    out = tmp_path / "out"
    _, rows = read_csv(out / "curve.csv")
    assert rows[1][1] == "inf" and rows[1][3] == "divergent"
    assert json.loads((out / "curve.json").read_text())["points"][0]["beta_c"] is None
    assert "set arrow from 0.5" in (out / "curve.gp").read_text()


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(a, ["curve", "--seed", "7"], SMALL) == 0
    assert run(b, ["curve", "--seed", "7"], SMALL) == 0
    for name in ("curve.csv", "curve.json", "curve.gp"):
        assert (a / "out" / name).read_bytes() == (b / "out" / name).read_bytes()


@pytest.mark.parametrize("patch", [
    {"sweep": {"rho_min": 0.3, "rho_max": 0.5, "points": 0}},
    {"sweep": {"rho_min": 0.3, "rho_max": 1.2, "points": 3}},
    {"format_version": 2},
    {"bogus": 1},
    {"model": {"interaction": "finite", "lambda": -1}},
    {"disorder": {"kind": "bernoulli", "p": 1.5, "eps": 1}},
    {"seed": -3},
])
def test_config_errors_exit_2(tmp_path, patch):
    assert run(tmp_path, ["curve"], {**SMALL, **patch}) == 2


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["curve", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_preset_only_for_curve(tmp_path):
    assert cli.main(["ids", "--preset", "fig1", "--out", str(tmp_path)]) == 2


def test_presets_resolve():
    for name in cli.PRESETS:
        cfg = cli.resolve_config({}, "curve", name, 7, None)
        assert cfg["seed"] == 7 and cfg["name"] == name
        assert all(c["sweep"]["points"] >= 1 for c in cfg["curves"])
    cfg = cli.resolve_config({}, "curve", "fig1", None, 50.0)
    assert {c["sweep"]["beta_max"] for c in cfg["curves"]} == {50.0}


def test_rho_grid_is_decimal_clean():
    assert cli.rho_grid({"rho_min": 0.1, "rho_max": 0.9, "points": 9})[2] == 0.3


def test_constants(tmp_path, capsys):
    cfg = {"constants": {"lambda": 6.0, "p": 0.5, "eps": 2.0}}
    assert run(tmp_path, ["constants"], cfg) == 0
    doc = json.loads((tmp_path / "out" / "constants.json").read_text())
    c = doc["constants"]
    assert c["lambda_c1"] == pytest.approx((3 + math.sqrt(13)) / 2)
    assert c["trinomial_eps_cr"] == pytest.approx(12 * math.sqrt(0.6))
    assert c["lambda_c_1mp"] is None
    assert "lambda_c1" in capsys.readouterr().out


def test_pressure(tmp_path):
    cfg = {"model": {"interaction": "hardcore"}, "grid": {"beta": [10.0], "mu": [1.0, 5.0]}}
    assert run(tmp_path, ["pressure"], cfg) == 0
    _, rows = read_csv(tmp_path / "out" / "pressure.csv")
    assert rows[0] == ["beta", "mu", "p", "r_star", "bec"]
    assert rows[1][4] == "true" and rows[2][4] == "false"


def test_oracle_and_ids(tmp_path):
    cfg = {"oracle": {"V": [2, 3], "n_max": 2}, "ids": {"V": 50, "samples": 2, "E": [0.5, 2.0]}}
    assert run(tmp_path, ["oracle"], cfg) == 0
    _, rows = read_csv(tmp_path / "out" / "oracle.csv")
    assert len(rows) == 3 and all(float(r[-1]) >= -1e-9 for r in rows[1:])
    _, rows = read_csv(tmp_path / "out" / "ids.csv")
    assert rows[1][:2] == ["0.5", "0.02"] and rows[2][1] == "1.0"
    assert run(tmp_path, ["ids"], cfg) == 0


def test_oracle_dimension_guard(tmp_path):
    assert run(tmp_path, ["oracle"], {"oracle": {"V": [14], "n_max": 3}}) == 2


def test_invariant_violation_exit_3(tmp_path, monkeypatch):
    monkeypatch.setattr(oracle, "exact_pressure", lambda c: -1.0)
    assert run(tmp_path, ["oracle"], {"oracle": {"V": [2]}}) == 3
