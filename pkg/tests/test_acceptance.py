"""The ten acceptance criteria.

Each ``check_*`` returns ``(passed, detail)``. Under pytest every result is
also collected into ``RESULTS`` and printed as one PASS/FAIL line in the
terminal summary (see conftest.py). ``python tests/test_acceptance.py``
prints the same lines without pytest.
"""

import contextlib
import filecmp
import io
import random
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _factories import goal_for, placement_plan, random_dag, scripted, table_env  # noqa: E402
from skillalloc.allocation import WeightMatrix, arm_weight, max_objective, solve_assignment  # noqa: E402
from skillalloc.cli import main as cli_main  # noqa: E402
from skillalloc.decode import build_skill_list  # noqa: E402
from skillalloc.depgraph import generate_dependencies  # noqa: E402
from skillalloc.episode import EpisodeParams, precedence_violations, run_episode  # noqa: E402
from skillalloc.errors import CyclicAfterRetries, DecodeOverflow  # noqa: E402
from skillalloc.metrics import TrialResult, spl, success_rate  # noqa: E402
from skillalloc.scenarios import load_corpus, load_scenario_env, run_scenario  # noqa: E402
from skillalloc.scoring import MockScorer, Scorer  # noqa: E402
from skillalloc.skills import enumerate_skill_set, format_skill, parse_skill  # noqa: E402
from skillalloc.world import load_environment  # noqa: E402

GOLDEN = Path(__file__).parent / "golden" / "env_a"
RESULTS = []

pytestmark = pytest.mark.acceptance


def check_1_assignment_optimality():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        W = WeightMatrix.from_arrays(rng.random((n, m)), rng.random((n, m)) < 0.7)
        if solve_assignment(W).objective != max_objective(W):
            mismatches += 1
    solve_time = time.perf_counter() - t0
    return mismatches == 0 and solve_time < 5.0, f"1000 matrices, {mismatches} mismatches, {solve_time:.2f}s incl. brute force"


def check_2_arm_weight():
    want = [1.0, 0.925, 0.85, 0.775, 0.7]
    got = [arm_weight(d, 0.3) for d in (0.0, 0.25, 0.5, 0.75, 1.0)]
    err = max(abs(a - b) for a, b in zip(got, want))
    return err <= 1e-12, f"max abs error {err:.1e}"


def check_3_spl():
    worked = [
        spl([TrialResult(True, 3, 3)]) - 1.0,
        spl([TrialResult(True, 5, 4)]) - 0.8,
        spl([TrialResult(False, 2, 3)]) - 0.0,
    ]
    exact = all(abs(e) <= 1e-12 for e in worked)
    rng = random.Random(7)
    bad = 0
    for _ in range(1000):
        trials = []
        for _ in range(rng.randint(1, 20)):
            ok = rng.random() < 0.6
            trials.append(TrialResult(ok, rng.randint(1, 10) if ok else rng.randint(0, 10), rng.randint(1, 8)))
        s, sr = spl(trials), success_rate(trials)
        if not 0.0 <= s <= sr <= 1.0:
            bad += 1
    return exact and bad == 0, f"worked examples exact={exact}, bound violations {bad}/1000"


def check_4_precedence():
    rng = random.Random(4)
    violations = successes = 0
    for _ in range(500):
        n = rng.randint(1, 10)
        env = table_env(n, rng.randint(2, 5))
        commands, goal = placement_plan(n)
        trace = run_episode("task", goal_for(env, goal), env, scripted("task", commands, random_dag(n, rng))).to_dict()
        if trace["outcome"] == "success":
            successes += 1
            violations += len(precedence_violations(trace))
    return violations == 0 and successes == 500, f"{successes}/500 succeeded, {violations} violations"


class _Fuzz(Scorer):
    GHOST = "pick_and_place(red block, the moon)"

    def __init__(self, seed):
        self.rng = random.Random(seed)
        self.stop_at = self.rng.randint(0, 12)
        self.calls = 0
        self.ghost_offered = False

    def _score(self, req):
        self.calls += 1
        self.ghost_offered |= self.GHOST in req.candidates
        done = 0.0 if self.calls > self.stop_at else -50.0
        return [done if c == "done()" else self.rng.uniform(-20.0, -1.0) for c in req.candidates]


def check_5_anti_hallucination():
    emitted = outside = ghost = 0
    for name in "ABC":
        env = load_environment(name)
        sset = enumerate_skill_set(env.world, env.templates)
        vocab = set(sset.instances)
        for seed in range(100):
            scorer = _Fuzz(seed)
            try:
                out = build_skill_list("fuzz", sset, scorer)
            except DecodeOverflow:
                continue
            ghost += scorer.ghost_offered
            emitted += len(out)
            outside += sum(1 for s in out.items if s not in vocab)
            outside += sum(1 for s in out.items if format_skill(s) == _Fuzz.GHOST)
    ghost_absent = parse_skill(_Fuzz.GHOST) not in sset
    ok = outside == 0 and ghost == 0 and ghost_absent and emitted > 0
    return ok, f"{emitted} emitted skills, {outside} outside the skill set, ghost offered {ghost} times"


def check_6_cycles():
    skills = [parse_skill("pick_and_place(red block, middle)"), parse_skill("pick_and_place(yellow block, red block)")]
    g = generate_dependencies("go", skills, MockScorer(completions={"go": ["0 -> 1\n1 -> 0", "0 -> 1"]}))
    recovered = g.edges == {(0, 1)} and g.attempts == 2

    calls = []

    class Always(MockScorer):
        def _complete(self, prompt, stop):
            calls.append(prompt)
            return "0 -> 1\n1 -> 0"

    try:
        generate_dependencies("go", skills, Always())
        gave_up = False
    except CyclicAfterRetries as exc:
        gave_up = exc.attempts == 3 and len(calls) == 3
    return recovered and gave_up, f"recovered on attempt {g.attempts}, always-cyclic stopped after {len(calls)} attempts"


def check_7_parallelism():
    env = table_env(2, 2)
    commands, goal = placement_plan(2)
    free = run_episode("t", goal_for(env, goal), env, scripted("t", commands, set())).to_dict()
    chain = run_episode("t", goal_for(env, goal), env, scripted("t", commands, {(0, 1)})).to_dict()
    stays = [a["command"] for a in chain["rounds"][0]["assignments"]].count("stay()") if chain["rounds"] else -1
    ok = free["step_count"] == 1 and chain["step_count"] == 2 and stays == 1
    ok = ok and free["outcome"] == chain["outcome"] == "success"
    return ok, f"edgeless: {free['step_count']} round(s), chain: {chain['step_count']} rounds with {stays} stay() in round 1"


def check_8_constraints():
    checked = bad = runs = 0
    for corpus in "ABC":
        for scenario in load_corpus(corpus):
            for cond in "123":
                env = load_scenario_env(scenario, condition=cond)
                trace = run_scenario(scenario, env)
                runs += 1
                world = scenario.world_for(env)
                for rnd in trace["rounds"]:
                    for a in rnd["assignments"]:
                        skill = parse_skill(a["command"])
                        if skill.name not in ("pick_and_place", "pick_up"):
                            continue
                        checked += 1
                        robot = world.robots[a["robot"]]
                        if not robot.can_grasp(world.objects[skill.args[0]].color):
                            bad += 1
    return bad == 0 and runs == 36, f"{runs} runs, {checked} grasping assignments, {bad} outside the graspable set"


def check_9_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        codes = []
        same = golden_ok = True
        for cond in "123":
            a, b = tmp / f"a{cond}", tmp / f"b{cond}"
            with contextlib.redirect_stdout(io.StringIO()):
                codes.append(cli_main(["run", "--scenario", "A", "--condition", cond, "--out", str(a)]))
                codes.append(cli_main(["run", "--scenario", "A", "--condition", cond, "--out", str(b), "--jobs", "3"]))
            names = sorted(p.name for p in a.glob("*.json"))
            _, diff, err = filecmp.cmpfiles(a, b, names, shallow=False)
            same &= not diff and not err and len(names) == 6
            gold = GOLDEN / f"c{cond}"
            _, diff, err = filecmp.cmpfiles(a, gold, names, shallow=False)
            golden_ok &= not diff and not err and names == sorted(p.name for p in gold.glob("*.json"))
    ok = same and golden_ok and all(c == 0 for c in codes)
    return ok, f"repeat runs identical={same}, golden match={golden_ok}"


def check_10_deadlock():
    env = load_environment("A", condition="3")
    # no robot may ever put a bowl on a block
    commands = ["pick_and_place(red block, middle)", "pick_and_place(green bowl, yellow block)"]
    goal = goal_for(env, ["at(red block, middle)"])
    scorer = scripted("t", commands, "")
    params = EpisodeParams()
    t0 = time.perf_counter()
    trace = run_episode("t", goal, env, scorer, params).to_dict()
    elapsed = time.perf_counter() - t0
    bound = len(commands) + params.retry_cap * len(commands)
    ok = trace["failure_reason"] == "Deadlock" and trace["step_count"] <= bound
    return ok, f"{trace['failure_reason']} after {trace['step_count']} rounds (bound {bound}) in {elapsed:.3f}s"


CHECKS = [
    ("AC1 assignment optimality", check_1_assignment_optimality),
    ("AC2 arm weight values", check_2_arm_weight),
    ("AC3 SPL examples and bound", check_3_spl),
    ("AC4 precedence soundness", check_4_precedence),
    ("AC5 anti-hallucination", check_5_anti_hallucination),
    ("AC6 cycle handling", check_6_cycles),
    ("AC7 parallelism", check_7_parallelism),
    ("AC8 constraint respect", check_8_constraints),
    ("AC9 end-to-end determinism", check_9_determinism),
    ("AC10 deadlock detection", check_10_deadlock),
]


def _line(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("name,check", CHECKS, ids=[n.split()[0] for n, _ in CHECKS])
def test_criterion(name, check):
    ok, detail = check()
    line = _line(name, ok, detail)
    RESULTS.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for name, check in CHECKS:
        ok, detail = check()
        failed += not ok
        print(_line(name, ok, detail))
    sys.exit(1 if failed else 0)
