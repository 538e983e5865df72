import json

import pytest

from privshare.cli import main


def read(path):
    return json.loads(path.read_text())


def test_simulate_writes_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "sec6", "--out", str(a)]) == 0
    assert main(["simulate", "sec6", "--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    lines = (a / "trace.csv").read_text().splitlines()
    assert lines[0] == "iteration,agent,v,x_next,alpha"
    assert len(lines) == 1 + 500 * 3
    rep = read(a / "report.json")
    assert rep["seed"] == 2017
    assert rep["config_hash"] == read(b / "report.json")["config_hash"]
    assert rep["metrics"]["final"]["iteration"] == 500
    assert (a / "metrics.csv").exists()


def test_simulate_iterations_override(tmp_path):
    assert main(["simulate", "sec6", "--iterations", "7", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "trace.csv").read_text().splitlines()) == 1 + 7 * 3


def test_seed_sources(tmp_path, monkeypatch):
    main(["simulate", "fig4b", "--out", str(tmp_path / "file")])
    monkeypatch.setenv("PRIVSHARE_SEED", "99")
    main(["simulate", "fig4b", "--out", str(tmp_path / "env")])
    main(["simulate", "fig4b", "--seed", "5", "--out", str(tmp_path / "flag")])
    assert read(tmp_path / "file" / "report.json")["seed"] == 12
    assert read(tmp_path / "env" / "report.json")["seed"] == 99
    assert read(tmp_path / "flag" / "report.json")["seed"] == 5
    assert (tmp_path / "env" / "trace.csv").read_bytes() != (tmp_path / "flag" / "trace.csv").read_bytes()


def test_invalid_mixing_exits_2(tmp_path, capsys):
    sc = json.loads(json.dumps({
        "topology": {"nodes": 3, "edges": [[0, 1], [1, 2]]},
        "objectives": [[0, 0, 1], [0, 0, 1], [0, 0, 1]],
        "mixing": [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]],
    }))
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(sc))
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "not linked" in capsys.readouterr().err


def test_malformed_inputs_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["simulate", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["check-topology", str(bad), "--f", "1"]) == 2
    bad.write_text(json.dumps({"nodes": 2, "edges": [[0, 0]]}))
    assert main(["check-topology", str(bad), "--f", "1"]) == 2
    assert main(["attack", "sec6", "--coalition", "9", "--out", str(tmp_path)]) == 2
    assert main(["attack", "sec6", "--coalition", "x", "--out", str(tmp_path)]) == 2


def test_attack_example1(tmp_path):
    assert main(["attack", "example1", "--out", str(tmp_path)]) == 0
    rep = read(tmp_path / "attack_report.json")
    assert {k: v["verdict"] for k, v in rep["agents"].items()} == {"1": "recovered_original", "2": "recovered_original"}
    assert rep["gradient_degree"] == 3


def test_attack_sec6(tmp_path):
    assert main(["attack", "sec6", "--out", str(tmp_path)]) == 0
    rep = read(tmp_path / "attack_report.json")
    assert all(v["verdict"] == "recovered_obfuscated_only" for v in rep["agents"].values())
    assert rep["aggregate"]["total"] == pytest.approx([0, 0, 2, 0, 2], abs=1e-6)


def test_attack_whole_network(tmp_path, capsys):
    assert main(["attack", "sec6", "--coalition", "0,1,2", "--out", str(tmp_path)]) == 0
    assert read(tmp_path / "attack_report.json")["agents"] == {}
    assert "no good agents" in capsys.readouterr().out


def test_verify_privacy_sec6(tmp_path):
    assert main(["verify-privacy", "sec6", "--out", str(tmp_path)]) == 0
    rep = read(tmp_path / "verifier_report.json")
    assert rep["verdict"] is True and rep["trials"] == 100
    assert rep["max_residual"] <= 1e-8
    assert all(r["identical_trace"] for r in rep["results"])


def test_verify_privacy_not_admissible(tmp_path, capsys):
    assert main(["verify-privacy", "fig4a", "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert "individual privacy loss" in err and "[3]" in err
    assert read(tmp_path / "verifier_report.json")["verdict"] is False


def test_verify_privacy_zero_trials(tmp_path):
    assert main(["verify-privacy", "sec6", "--trials", "0", "--out", str(tmp_path)]) == 0
    assert read(tmp_path / "verifier_report.json")["trials"] == 0


def test_check_topology(tmp_path, capsys):
    assert main(["check-topology", "k3_topology", "--f", "1"]) == 0
    out = capsys.readouterr().out
    assert "kappa = 2" in out and "1-admissible: yes" in out
    assert main(["check-topology", "fig4b_topology", "--f", "1", "--out", str(tmp_path)]) == 4
    rep = read(tmp_path / "topology_report.json")
    assert {"coalition": [2], "individual": [], "groups": [[0, 1], [3, 4, 5]]} in rep["findings"]
    edge = tmp_path / "edge.json"
    edge.write_text(json.dumps({"nodes": 2, "edges": [[0, 1]]}))
    assert main(["check-topology", str(edge), "--f", "1"]) == 4
    assert main(["check-topology", "fig4a", "--f", "1", "--coalition", "2"]) == 4


@pytest.mark.parametrize("name", ["example1", "table2"])
def test_demos_pass(name, capsys):
    assert main(["demo", name]) == 0
    assert capsys.readouterr().out.strip().endswith("PASS")
