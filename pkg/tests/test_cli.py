import json

import pytest

from teamdecide.cli import main


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "sim.json"
    cfg.write_text(json.dumps({"n_teams": 6, "n_questions": 40, "seed": 2}))
    out = root / "logs"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    return root


def test_simulate_writes_logs_and_manifest(sim_dir):
    logs = sorted((sim_dir / "logs").glob("team*.json"))
    assert len(logs) == 6
    man = json.loads((sim_dir / "logs" / "manifest.json").read_text())
    for key in ("command", "config_hash", "seed", "tool_version", "inputs", "outputs",
                "started", "finished"):
        assert key in man
    assert man["seed"] == 2


def test_simulate_is_deterministic(sim_dir, tmp_path):
    out = tmp_path / "again"
    assert main(["simulate", "--config", str(sim_dir / "sim.json"), "--out", str(out)]) == 0
    for p in sorted((sim_dir / "logs").glob("team*.json")):
        assert (out / p.name).read_bytes() == p.read_bytes()


def test_fit_and_evaluate(sim_dir, tmp_path):
    logs = str(sim_dir / "logs")
    params = tmp_path / "pt.json"
    assert main(["fit", "--logs", logs, "--model", "PT-NB", "--loss", "binary",
                 "--out", str(params), "--jobs", "2"]) == 0
    doc = json.loads(params.read_text())
    assert len(doc["params"]) == 6
    wfile = tmp_path / "w.json"
    assert main(["fit", "--logs", logs, "--model", "CENT", "--task", "dt2",
                 "--w-train-teams", "4", "--out", str(wfile)]) == 0
    assert 0 <= json.loads(wfile.read_text())["w"] <= 1

    ev = tmp_path / "eval"
    assert main(["evaluate", "--logs", logs, "--models", "NB,CENT,PT-NB,RANDOM",
                 "--params", str(params), "--out", str(ev)]) == 0
    for name in ("per_team.csv", "summary.csv", "summary.json", "pvalues.csv",
                 "cumulative.csv", "reports.json", "manifest.json"):
        assert (ev / name).is_file()
    summary = json.loads((ev / "summary.json").read_text())
    assert summary["models"] == ["NB", "CENT", "PT-NB", "RANDOM"]
    first = (ev / "summary.csv").read_bytes()
    ev2 = tmp_path / "eval2"
    assert main(["evaluate", "--logs", logs, "--models", "NB,CENT,PT-NB,RANDOM",
                 "--params", str(params), "--out", str(ev2)]) == 0
    assert (ev2 / "summary.csv").read_bytes() == first

    ev3 = tmp_path / "eval3"
    assert main(["evaluate", "--logs", logs, "--task", "dt2", "--models", "CENT,CENT-H,RANDOM",
                 "--params", str(wfile), "--split", "all", "--out", str(ev3)]) == 0


@pytest.mark.parametrize("argv", [
    ["fit", "--logs", "/nonexistent", "--model", "PT-NB", "--out", "x.json"],
    ["evaluate", "--logs", "{logs}", "--models", "NB,BOGUS", "--out", "{tmp}/e"],
    ["evaluate", "--logs", "{logs}", "--models", "PT-NB", "--out", "{tmp}/e"],
    ["evaluate", "--logs", "{logs}", "--task", "dt2", "--models", "CENT", "--out", "{tmp}/e"],
    ["fit", "--logs", "{logs}", "--model", "NB", "--out", "{tmp}/p.json"],
    ["fit", "--logs", "{logs}", "--model", "PT-NB", "--train-questions", "40",
     "--out", "{tmp}/p.json"],
    ["selftest", "--scheme", "4,1"],
])
def test_usage_errors_exit_2(argv, sim_dir, tmp_path, capsys):
    argv = [a.format(logs=sim_dir / "logs", tmp=tmp_path) for a in argv]
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_simulate_bad_config(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"n_teams": 0}))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    cfg.write_text("{not json")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_corrupt_log_is_rejected(tmp_path, capsys):
    d = tmp_path / "logs"
    d.mkdir()
    (d / "t.json").write_text(json.dumps({"team_id": "t"}))
    assert main(["evaluate", "--logs", str(d), "--models", "NB", "--out", str(tmp_path / "e")]) == 2


def test_selftest(capsys):
    assert main(["selftest", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "PASS example-1" in out and "PASS example-3" in out
    assert main(["selftest", "--quick", "--scheme", "5,1,1"]) == 1
    assert "FAIL example-1" in capsys.readouterr().out
