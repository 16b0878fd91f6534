import csv
import io
import json
import math

import pytest

from atomic_bs import cli, oracles
from atomic_bs.cli import HEADERS, RunConfig, load_recipe, main, parse_values, recipe_names


def _table(text):
    return list(csv.reader(io.StringIO(text)))


def test_parse_values():
    assert parse_values("0.1, 0.5,1") == (0.1, 0.5, 1.0)
    assert parse_values("lin:0:1:3") == (0.0, 0.5, 1.0)
    assert parse_values("log:0.1:10:3") == pytest.approx((0.1, 1.0, 10.0))
    assert parse_values("") == ()


def test_config_roundtrip():
    cfg = RunConfig(command="marginal", pulse="gaussian", bandwidth=0.3, values=(0.1, 1 / 3),
                    postselect=2.5, time=7.0)
    assert RunConfig.from_text(cfg.to_text()) == cfg
    assert RunConfig.from_text(RunConfig().to_text()).time == math.inf


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config key"):
        RunConfig.from_text("[run]\nbandwith = 1\n")
    with pytest.raises(ValueError, match=r"\[run\]"):
        RunConfig.from_text("[other]\nbandwidth = 1\n")


@pytest.mark.parametrize("name", recipe_names())
def test_recipes_load_and_validate(name):
    cfg = load_recipe(name)
    cfg.validate()
    assert cfg.command in cli.COMMANDS


def test_unknown_recipe():
    with pytest.raises(ValueError, match="available"):
        load_recipe("fig99")


def test_coincidence_table(capsys):
    assert main(["coincidence", "--sweep", "bandwidth", "--values", "0.5, 1.25"]) == 0
    rows = _table(capsys.readouterr().out)
    assert tuple(rows[0]) == HEADERS["coincidence"]
    x, atomic, linear, oracle = map(float, rows[2])
    assert x == 1.25
    assert atomic == pytest.approx(oracles.coincidence_square_resonant(1.25), abs=1e-3)
    assert oracle == pytest.approx(oracles.coincidence_square_resonant(1.25), abs=1e-12)
    assert linear == pytest.approx(0.5, abs=1e-2)


def test_oracle_column_empty_outside_domain(capsys):
    main(["coincidence", "--pulse", "gaussian", "--values", "1.0"])
    assert _table(capsys.readouterr().out)[1][3] == ""


def test_excitation_table(capsys):
    main(["excitation", "--bandwidths", "1.25"])
    rows = _table(capsys.readouterr().out)
    assert tuple(rows[0]) == HEADERS["excitation"]
    assert {r[0] for r in rows[1:]} == {"1.25"}
    assert max(float(r[2]) for r in rows[1:]) == pytest.approx(0.34, abs=0.01)


def test_delay_scan_table(capsys):
    main(["delay-scan", "--bandwidth", "0.5", "--detuning", "1", "--delays", "0, 40"])
    rows = _table(capsys.readouterr().out)
    assert tuple(rows[0]) == HEADERS["delay-scan"]
    assert [float(r[0]) for r in rows[1:]] == [0.0, 40.0]


def test_marginal_table(capsys):
    main(["marginal", "--bandwidth", "1", "--points", "128"])
    rows = _table(capsys.readouterr().out)
    assert tuple(rows[0]) == HEADERS["marginal"]
    tau = [float(r[0]) for r in rows[1:]]
    dens = [float(r[1]) for r in rows[1:]]
    assert sum(dens) * (tau[1] - tau[0]) == pytest.approx(1.0, abs=1e-6)


def test_joint_writes_sidecar(tmp_path, monkeypatch):
    monkeypatch.setenv("ATOMIC_BS_OUTPUT_DIR", str(tmp_path))
    main(["joint", "--bandwidth", "1", "--points", "32", "-o", "joint.csv"])
    rows = _table((tmp_path / "joint.csv").read_text())
    assert tuple(rows[0]) == HEADERS["joint"] and len(rows) == 1 + 32 * 32
    side = json.loads((tmp_path / "joint.json").read_text())
    assert {"config", "grid", "normalization", "runtime_seconds", "engine_versions"} <= set(side)
    assert side["config"]["time"] == "inf"
    assert side["grid"]["domain"] == "time"


def test_runs_are_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        main(["joint", "--domain", "frequency", "--bandwidth", "2", "--pulse", "gaussian",
              "--points", "41", "-o", str(path)])
        side = json.loads(path.with_suffix(".json").read_text())
        side.pop("runtime_seconds")
        side["config"].pop("output")
        outs.append((path.read_bytes(), side))
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0][0]


def test_json_format(capsys):
    main(["coincidence", "--values", "1", "--format", "json"])
    table = json.loads(capsys.readouterr().out)
    assert table["columns"] == list(HEADERS["coincidence"])
    assert len(table["rows"]) == 1


def test_dump_config_applies_recipe_and_overrides(capsys):
    main(["coincidence", "--recipe", "fig2", "--bandwidth", "0.03", "--dump-config"])
    cfg = RunConfig.from_text(capsys.readouterr().out)
    assert cfg.sweep == "detuning" and cfg.bandwidth == 0.03 and len(cfg.values) == 81


@pytest.mark.parametrize("argv", [
    ["joint", "--domain", "frequency", "--time", "3"],
    ["coincidence", "--sweep", "gamma", "--values", "1"],
    ["joint", "--detuning", "0.5"],
    ["excitation", "--recipe", "fig2"],
    ["coincidence", "--pulse", "sampled"],
])
def test_bad_invocations_exit_with_usage_error(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert "error" in capsys.readouterr().err
