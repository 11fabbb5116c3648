import random

import pytest

from _factories import goal_for, placement_plan, random_dag, scripted, table_env
from skillalloc.episode import EpisodeParams, precedence_violations, run_episode
from skillalloc.errors import BackendUnavailable
from skillalloc.scoring import MockScorer, Scorer


def _run(env, commands, edges, goal, **kw):
    return run_episode("task", goal_for(env, goal), env, scripted("task", commands, edges), **kw).to_dict()


def test_independent_pair_one_round():
    env = table_env(2, 2)
    commands, goal = placement_plan(2)
    t = _run(env, commands, set(), goal)
    assert t["outcome"] == "success" and t["step_count"] == 1
    assert [a["outcome"] for a in t["rounds"][0]["assignments"]] == ["success", "success"]


def test_chain_two_rounds_with_stay():
    env = table_env(2, 2)
    commands, goal = placement_plan(2)
    t = _run(env, commands, {(0, 1)}, goal)
    assert t["step_count"] == 2
    first = t["rounds"][0]["assignments"]
    assert sorted(a["command"] for a in first).count("stay()") == 1


def test_unreachable_skill_deadlocks():
    env = table_env(2, 2, graspable={"robot1": ["c0"], "robot2": ["c0"]})
    commands, goal = placement_plan(2)
    t = _run(env, commands, set(), goal)
    assert t["outcome"] == "failure" and t["failure_reason"] == "Deadlock"
    assert t["step_count"] <= 2 + EpisodeParams().retry_cap


def test_conflicting_plan_exhausts_retries():
    env = table_env(2, 2, n_cells=2)
    # both skills target the same cell forever; no edge separates them
    commands = ["pick_and_place(b0 block, cell 0)", "pick_and_place(b1 block, cell 0)"]
    t = _run(env, commands, set(), ["at(b0 block, cell 0)"])
    assert t["outcome"] == "failure" and t["failure_reason"] == "RetryExhausted"
    assert t["step_count"] == EpisodeParams().retry_cap + 1


def test_goal_not_met():
    env = table_env(2, 2)
    commands, _ = placement_plan(1)
    t = _run(env, commands, set(), ["at(b1 block, cell 1)"])
    assert t["failure_reason"] == "GoalNotMet"


def test_empty_plan_succeeds_only_if_goal_holds():
    env = table_env(1, 2)
    t = _run(env, [], set(), [])
    assert t["outcome"] == "success" and t["step_count"] == 0
    t = _run(env, [], set(), ["at(b0 block, cell 0)"])
    assert t["failure_reason"] == "GoalNotMet"


def test_cyclic_graph_recorded_as_failure():
    env = table_env(2, 2)
    commands, goal = placement_plan(2)
    t = _run(env, commands, "0 -> 1\n1 -> 0", goal)
    assert t["failure_reason"] == "CyclicAfterRetries" and t["graph_attempts"] == 0


def test_backend_outage_propagates():
    class Down(Scorer):
        def _score(self, req):
            raise BackendUnavailable("down")

    env = table_env(1, 2)
    with pytest.raises(BackendUnavailable):
        run_episode("task", goal_for(env, []), env, Down())


def test_random_episodes_respect_precedence():
    rng = random.Random(21)
    for _ in range(150):
        n = rng.randint(1, 10)
        env = table_env(n, rng.randint(2, 5))
        commands, goal = placement_plan(n)
        t = _run(env, commands, random_dag(n, rng), goal)
        assert t["outcome"] == "success"
        assert precedence_violations(t) == []
        assert t["step_count"] <= n


def test_precedence_checker_flags_violations():
    trace = {
        "edges": [[0, 1]],
        "rounds": [
            {"round": 1, "assignments": [{"node": 0, "outcome": "success"}, {"node": 1, "outcome": "success"}]}
        ],
    }
    assert precedence_violations(trace) == [(0, 1)]


def test_trace_fields():
    env = table_env(2, 2)
    commands, goal = placement_plan(2)
    t = _run(env, commands, set(), goal)
    for key in ("instruction", "skill_list", "edges", "rounds", "step_count", "planning_time_ms", "outcome"):
        assert key in t
