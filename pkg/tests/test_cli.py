import json
from pathlib import Path

import pytest

from skillalloc.cli import main

GOLDEN = Path(__file__).parent / "golden" / "env_a"


def _script(tmp_path, edges="0 -> 1", skills=None):
    data = {
        "instruction": "stack red on yellow",
        "skills": skills or ["pick_and_place(yellow block, middle)", "pick_and_place(red block, yellow block)", "done()"],
        "edges": edges,
    }
    p = tmp_path / "script.json"
    p.write_text(json.dumps(data))
    return p


def test_plan_writes_dot(tmp_path, capsys):
    out = tmp_path / "g.dot"
    assert main(["plan", "--env", "A", "--mock-script", str(_script(tmp_path)), "--out", str(out)]) == 0
    assert "0 -> 1;" in out.read_text()
    assert "1: pick_and_place(red block, yellow block)" in capsys.readouterr().out


def test_plan_missing_env(tmp_path):
    assert main(["plan", "--env", str(tmp_path / "none.json"), "--instruction", "x", "--mock-script", str(_script(tmp_path))]) == 2


def test_plan_always_cyclic(tmp_path):
    code = main(["plan", "--env", "A", "--mock-script", str(_script(tmp_path, "0 -> 1\n1 -> 0")), "--out", str(tmp_path / "g.dot")])
    assert code == 4
    assert not (tmp_path / "g.dot").exists()


def test_plan_decode_overflow(tmp_path):
    script = _script(tmp_path, skills=["pick_and_place(red block, middle)"] * 5)
    assert main(["plan", "--env", "A", "--mock-script", str(script), "--max-len", "3"]) == 3


def test_plan_bad_edge_text(tmp_path):
    assert main(["plan", "--env", "A", "--mock-script", str(_script(tmp_path, "0 -> 5")), "--out", str(tmp_path / "g.dot")]) == 10


def test_plan_http_unreachable(tmp_path):
    code = main(
        ["plan", "--env", "A", "--instruction", "x", "--scorer", "http", "--endpoint", "http://127.0.0.1:9/v1/completions", "--model", "m", "--timeout", "0.5"]
    )
    assert code == 5


def test_run_http_unreachable(tmp_path):
    code = main(
        ["run", "--scenario", "A", "--id", "three-stack", "--scorer", "http", "--endpoint", "http://127.0.0.1:9/v1/completions", "--model", "m", "--timeout", "0.5", "--out", str(tmp_path)]
    )
    assert code == 5


@pytest.mark.parametrize("cond", ["1", "2", "3"])
def test_run_matches_golden(tmp_path, cond):
    assert main(["run", "--scenario", "A", "--condition", cond, "--out", str(tmp_path)]) == 0
    golden = sorted((GOLDEN / f"c{cond}").glob("*.json"))
    assert [p.name for p in golden] == sorted(p.name for p in tmp_path.glob("*.json"))
    for g in golden:
        assert (tmp_path / g.name).read_bytes() == g.read_bytes(), g.name


def test_run_seed_does_not_change_mock_trace(tmp_path):
    main(["run", "--scenario", "A", "--id", "stack-then-corners", "--seed", "1", "--out", str(tmp_path / "a")])
    main(["run", "--scenario", "A", "--id", "stack-then-corners", "--seed", "99", "--jobs", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "stack-then-corners.json").read_bytes() == (tmp_path / "b" / "stack-then-corners.json").read_bytes()


def test_run_unknown_id(tmp_path):
    assert main(["run", "--scenario", "A", "--id", "nope", "--out", str(tmp_path)]) == 2


def test_run_deadlock_exit_code(tmp_path):
    scen = {
        "env": "A",
        "scenarios": [
            {
                "id": "stuck",
                "instruction": "put the green block in the middle",
                "goal": ["at(green block, middle)"],
                "min_steps": 1,
                "mock": {"skills": ["pick_and_place(green block, middle)", "done()"], "edges": ""},
            }
        ],
    }
    p = tmp_path / "s.json"
    p.write_text(json.dumps(scen))
    assert main(["run", "--scenario", str(p), "--condition", "3", "--out", str(tmp_path / "t")]) == 0
    # a bowl can never go on a block, so no robot can ever run this skill
    scen["scenarios"][0]["mock"]["skills"] = ["pick_and_place(red bowl, red block)", "done()"]
    p.write_text(json.dumps(scen))
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "t")]) == 6
    trace = json.loads((tmp_path / "t" / "stuck.json").read_text())
    assert trace["failure_reason"] == "Deadlock"


def test_eval_matches_golden_report(tmp_path):
    out = tmp_path / "report.json"
    assert main(["eval", str(GOLDEN), "--out", str(out)]) == 0
    assert out.read_bytes() == (GOLDEN / "report.json").read_bytes()
    rep = json.loads(out.read_text())
    for row in rep["rows"] + [rep["overall"]]:
        assert row["spl"] <= row["success_rate"]


def test_eval_empty_dir(tmp_path):
    assert main(["eval", str(tmp_path)]) == 7


def test_atomic_write_leaves_no_temp(tmp_path):
    from skillalloc.cli import write_atomic

    write_atomic(tmp_path / "x" / "f.txt", "hi")
    assert [p.name for p in (tmp_path / "x").iterdir()] == ["f.txt"]
