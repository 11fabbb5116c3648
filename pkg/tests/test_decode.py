import random

import pytest

from skillalloc.decode import build_skill_list
from skillalloc.errors import DecodeOverflow
from skillalloc.scoring import MockPolicy, MockScorer, Scorer
from skillalloc.skills import enumerate_skill_set, format_skill
from skillalloc.world import load_environment


@pytest.fixture(scope="module")
def set_a():
    env = load_environment("A")
    return enumerate_skill_set(env.world, env.templates)


def _mock(plan):
    return MockScorer(MockPolicy.from_plans({"go": plan}))


def test_scripted_plan_decoded(set_a):
    plan = ["pick_and_place(red block, middle)", "pick_and_place(yellow block, red block)", "done()"]
    out = build_skill_list("go", set_a, _mock(plan))
    assert out.commands() == plan[:2]


def test_done_first_gives_empty_plan(set_a):
    assert build_skill_list("go", set_a, _mock(["done()"])).items == ()


def test_overflow(set_a):
    plan = ["pick_and_place(red block, middle)"] * 30
    with pytest.raises(DecodeOverflow):
        build_skill_list("go", set_a, _mock(plan), max_len=5)


def test_exactly_max_len_then_done(set_a):
    plan = ["pick_and_place(red block, middle)"] * 3 + ["done()"]
    assert len(build_skill_list("go", set_a, _mock(plan), max_len=3)) == 3


def test_stay_never_offered(set_a):
    class Spy(Scorer):
        def _score(self, req):
            assert "stay()" not in req.candidates
            return [0.0 if c == "done()" else -1.0 for c in req.candidates]

    build_skill_list("go", set_a, Spy())


class FuzzScorer(Scorer):
    """Random scores; every call would love an out-of-vocabulary skill if it could name one."""

    def __init__(self, seed):
        self.rng = random.Random(seed)
        self.ghost = "pick_and_place(purple block, moon)"
        self.stop_at = self.rng.randint(0, 15)
        self.calls = 0

    def _score(self, req):
        assert self.ghost not in req.candidates
        self.calls += 1
        done = 1.0 if self.calls > self.stop_at else -10.0
        return [self.rng.uniform(-10, 0) if c != "done()" else done for c in req.candidates]


def test_fuzzed_output_stays_in_vocabulary(set_a):
    vocab = {format_skill(s) for s in set_a.instances}
    for seed in range(50):
        scorer = FuzzScorer(seed)
        out = build_skill_list("go", set_a, scorer, max_len=20)
        assert len(out) == scorer.stop_at
        assert all(format_skill(s) in vocab for s in out.items)
