import csv
import json
import os

import numpy as np
import pytest

from chargedwall import cli, optimizer
from chargedwall.cli import (RESULT_COLUMNS, ConfigError, ExperimentConfig, emit_outputs,
                             load_config, resolve_config, run, sweep_lambda)

QUICK = ["--epsilon", "0.1", "--ell", "1", "--nx", "96", "--ny", "32", "--max-iters", "150",
         "--set", "amplitude=0.1"]


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = run(["--out", str(out), *args])
    return code, out


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_config_file_and_flag_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nmode = limit\nepsilon=0.05\nlambda = 2\nlambdas = 0.5 1 2\n")
    assert load_config(str(p))["epsilon"] == 0.05
    cfg = resolve_config(["--config", str(p), "--epsilon", "0.03", "--set", "ell=3"])
    assert cfg.mode == "limit" and cfg.epsilon == 0.03 and cfg.lam == 2.0
    assert cfg.ell == 3.0 and cfg.lambdas == (0.5, 1.0, 2.0)


@pytest.mark.parametrize("text", ["epsilon 0.1\n", "epsilon=abc\n", "colour=red\n",
                                  "epsilon=0.5\n", "nx=63\n"])
def test_malformed_config_exits_2(tmp_path, text, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    code, _ = _run(tmp_path, "--config", str(p))
    assert code == cli.EXIT_CONFIG == 2
    assert "config error" in capsys.readouterr().err


def test_bad_flags_exit_2(tmp_path):
    assert _run(tmp_path, "--mode", "dance")[0] == 2
    assert _run(tmp_path, "--config", str(tmp_path / "missing.cfg"))[0] == 2
    # straight wall recovery needs lambda <= 1
    assert _run(tmp_path, "--mode", "recovery", "--lambda", "2", "--epsilon", "0.05",
                "--ell", "1", "--nx", "160", "--ny", "40")[0] == 2


def test_limit_table_has_kink_at_one(tmp_path):
    code, out = _run(tmp_path, "--mode", "limit", "--ell", "1.5")
    assert code == 0
    rows = _read(out / "limit.csv")
    assert rows[0] == ["lambda", "e"]
    lam = np.array([float(r[0]) for r in rows[1:]])
    e = np.array([float(r[1]) for r in rows[1:]])
    assert lam[0] == 0 and lam[-1] == 4 and len(lam) == 17
    assert e[lam == 1.0][0] == pytest.approx(4 * 1.5, rel=1e-12)
    slope = np.diff(e) / np.diff(lam)
    left, right = slope[3], slope[4]          # segments ending and starting at lambda = 1
    assert left == pytest.approx(2 * 1.5) and right < left


def test_minimize_outputs_and_determinism(tmp_path):
    c1, a = _run(tmp_path, "--mode", "minimize", *QUICK, name="a")
    c2, b = _run(tmp_path, "--mode", "minimize", *QUICK, name="b")
    assert c1 == c2 == 0
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert {"minimize.csv", "descent_log.csv", "wall_trace.csv", "wall.svg", "summary.json",
            "config.resolved.txt"} <= set(names)
    for n in names:
        if n == "config.resolved.txt":          # echoes the output directory
            continue
        assert (a / n).read_bytes() == (b / n).read_bytes(), n
    rows = _read(a / "minimize.csv")
    assert tuple(rows[0]) == RESULT_COLUMNS
    doc = json.loads((a / "summary.json").read_text())
    assert doc["seed"] == 0 and doc["status"] == "ok" and doc["result"]["monotone"]
    assert "\nseed=0\n" in (a / "config.resolved.txt").read_text()
    assert "seed=0" in (a / "wall.svg").read_text()


def test_seed_changes_outputs(tmp_path):
    _run(tmp_path, "--mode", "energy", *QUICK, name="a")
    _run(tmp_path, "--mode", "energy", *QUICK, "--seed", "5", name="b")
    assert (tmp_path / "a" / "energy.csv").read_bytes() != (tmp_path / "b" / "energy.csv").read_bytes()


def test_numerical_failure_exits_3(tmp_path, monkeypatch, capsys):
    def boom(field, *a, **k):
        path = str(tmp_path / "state.cdwf")
        raise optimizer.DescentError("no descent", path, optimizer.IterationLog())

    monkeypatch.setattr(optimizer, "minimize", boom)
    code, out = _run(tmp_path, "--mode", "minimize", *QUICK)
    assert code == cli.EXIT_NUMERIC == 3
    assert "state.cdwf" in capsys.readouterr().err
    assert json.loads((out / "summary.json").read_text())["status"] == "failed"


def test_sweep_partial_failure_keeps_rows(tmp_path, monkeypatch):
    real = optimizer.minimize

    def flaky(field, bg, params, opts=None, **k):
        if params.lam == 4.0:
            raise optimizer.DescentError("no descent", str(tmp_path / "s.cdwf"),
                                         optimizer.IterationLog())
        return real(field, bg, params, opts, **k)

    monkeypatch.setattr(optimizer, "minimize", flaky)
    code, out = _run(tmp_path, "--mode", "sweep", *QUICK, "--set", "lambdas=0.25 4")
    assert code == 3
    doc = json.loads((out / "summary.json").read_text())
    assert doc["status"] == "partial"
    assert [r["lambda"] for r in doc["result"]["rows"]] == [0.25]
    assert len(_read(out / "sweep.csv")) == 2


def test_sweep_rows_and_overlay(tmp_path):
    code, out = _run(tmp_path, "--mode", "sweep", *QUICK, "--set", "lambdas=0.25 1 4")
    assert code == 0
    rows = _read(out / "sweep.csv")
    assert tuple(rows[0]) == RESULT_COLUMNS
    tot = [float(r[5]) for r in rows[1:]]
    assert np.all(np.diff(tot) > 0)
    svg = (out / "sweep_energy.svg").read_text()
    assert svg.startswith("<svg") and "e(lambda)" in svg


def test_empty_lambda_list_is_an_error():
    with pytest.raises(ConfigError):
        sweep_lambda(ExperimentConfig(), [])


def test_emit_outputs_formats(tmp_path):
    row = dict(zip(RESULT_COLUMNS, [1.0, 0.02, 0.5, 0.6, 0.7, 1.8, 4.0, 1.0]))
    paths = emit_outputs([row], str(tmp_path), "all")
    assert [os.path.basename(p) for p in paths] == ["results.csv", "results.json",
                                                    "results_energy.svg"]
    assert (tmp_path / "results.csv").read_text().splitlines()[0] == ",".join(RESULT_COLUMNS)
    doc = json.loads((tmp_path / "results.json").read_text())
    assert doc["columns"] == list(RESULT_COLUMNS) and doc["rows"][0]["total"] == 1.8
    assert "e(lambda)" in (tmp_path / "results_energy.svg").read_text()
    with pytest.raises(ValueError):
        emit_outputs([row], str(tmp_path), "xlsx")


def test_unwritable_output_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["--mode", "limit", "--out", str(blocker / "sub")]) == 2


def test_oracle_check_passes(tmp_path):
    code, out = _run(tmp_path, "--mode", "oracle-check", "--set", "oracle_count=4",
                     "--set", "oracle_n=32")
    assert code == 0
    rows = _read(out / "oracle.csv")
    assert rows[0] == ["index", "spectral", "singular", "helmholtz", "max_gap"]
    assert len(rows) == 5


def test_levelset_mode(tmp_path):
    code, out = _run(tmp_path, "--mode", "levelset", "--set", "region=annulus",
                     "--set", "delta0=0.05")
    assert code == 0
    assert (out / "decomposition.svg").exists()
    rows = _read(out / "offset_lengths.csv")
    assert rows[0] == ["t", "length"] and len(rows) == 22


def test_recovery_mode(tmp_path):
    code, out = _run(tmp_path, "--mode", "recovery", "--epsilon", "0.05", "--ell", "1",
                     "--nx", "160", "--ny", "40")
    assert code == 0
    doc = json.loads((out / "summary.json").read_text())
    assert doc["status"] == "ok" and "recovery" in doc["result"]


def test_resolved_config_round_trips(tmp_path):
    code, out = _run(tmp_path, "--mode", "limit", "--epsilon", "0.03", "--set", "lambdas=0.5 2")
    assert code == 0
    again = resolve_config(["--config", str(out / "config.resolved.txt")])
    assert again == resolve_config(["--mode", "limit", "--epsilon", "0.03", "--out", str(out),
                                    "--set", "lambdas=0.5 2"])
