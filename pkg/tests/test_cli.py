import json

import pytest

from deceptra.cli import default_seed, main
from deceptra.experiments import bundled


def lines(capsys):
    return [json.loads(x) for x in capsys.readouterr().out.splitlines() if x.startswith("{")]


def test_validate_bundled(capsys):
    assert main(["validate", str(bundled("illustrative.json"))]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_validate_rejects_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"states": ["x"], "actions": ["a"], "transitions": []}')
    assert main(["validate", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_asw_output(capsys):
    assert main(["asw", str(bundled("illustrative.json"))]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["region"] == ["1", "2", "3", "4", "f0"]
    assert out["prog"]["1"] == ["a"]


def test_build_aug_writes_files(tmp_path, capsys):
    dot, js = tmp_path / "g.dot", tmp_path / "g.json"
    assert main(["build-aug", "--mode", "invisible", "--dot", str(dot), "--json", str(js)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["states"]) == 6 and len(out["asw"]) == 4
    assert dot.read_text().startswith("digraph")
    assert main(["validate", str(js)]) == 0


def test_synthesize_and_simulate(tmp_path, capsys):
    strat = tmp_path / "s.json"
    assert main(["synthesize", "--mode", "visible", "--strategy", str(strat)]) == 0
    rep = lines(capsys)[0]
    assert (rep["aug_size"], rep["asw_size"], rep["winning"]) == (9, 5, True)
    assert "seconds" not in rep
    csvp = tmp_path / "t.csv"
    assert main(["simulate", "--strategy", str(strat), "--runs", "3", "--seed", "5", "--csv", str(csvp)]) == 0
    runs = lines(capsys)
    assert [r["seed"] for r in runs] == [5, 6, 7]
    assert all(r["status"] == "reached-F" for r in runs)
    assert sorted(p.name for p in tmp_path.glob("t-*.csv")) == ["t-5.csv", "t-6.csv", "t-7.csv"]


def test_losing_model_synthesis_exits_1(tmp_path, capsys):
    path = tmp_path / "m.json"
    assert main(["scenario", "grid", "--config", "a", "--out", str(path)]) == 0
    assert main(["synthesize", str(path)]) == 1
    assert lines(capsys)[0]["winning"] is False
    assert main(["check", str(path), "--runs", "5"]) == 1


def test_seed_env_override(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("DECEPTRA_SEED", "42")
    assert default_seed() == 42
    strat = tmp_path / "s.json"
    main(["synthesize", "--strategy", str(strat)])
    capsys.readouterr()
    main(["simulate", "--strategy", str(strat)])
    assert lines(capsys)[0]["seed"] == 42
    monkeypatch.delenv("DECEPTRA_SEED")
    assert default_seed() == 0


def test_check_both_modes(capsys):
    assert main(["check", "--runs", "50"]) == 0
    out = lines(capsys)
    assert [o["mode"] for o in out] == ["visible", "invisible"]
    assert out[0]["invisible_replay_empty_beliefs"] == 0
    assert all(o["counterexamples"] == [] for o in out)


def test_scenario_grid_custom_spec(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"rows": 2, "cols": 2, "user": {"target": [0]}, "attacker": {"target": [3]},
                                "sensor": {"coverage": [[1]]}, "start": 2}))
    assert main(["scenario", "grid", "--spec", str(spec)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["states"]) == 4


def test_table1_exits_1_on_diff(tmp_path, capsys):
    md = tmp_path / "t.md"
    assert main(["table1", "--markdown", str(md)]) == 1
    out = lines(capsys)
    assert len(out) == 6 and all(out[-1]["fallback"].values())
    assert md.read_text().count("\n") == 7


def test_replicate_figs(tmp_path, capsys):
    assert main(["replicate-figs", "--dot-dir", str(tmp_path)]) == 0
    out = lines(capsys)
    assert [o["match"] for o in out] == [True, True]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["invisible.dot", "visible.dot"]


def test_replicate_figs_variant_differs(capsys):
    assert main(["replicate-figs", "--invisible-any-action"]) == 1


@pytest.mark.parametrize("cmd", [["table1"], ["check", "--runs", "40"], ["synthesize"]])
def test_reports_are_byte_identical(tmp_path, cmd, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(cmd + ["--report", str(a)])
    main(cmd + ["--report", str(b)])
    assert a.read_bytes() == b.read_bytes() and a.stat().st_size > 0
