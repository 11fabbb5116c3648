"""Scenario corpora: instruction, goal, authored minimum steps and a mock script."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .episode import EpisodeParams, run_episode
from .errors import ConfigInvalid
from .scoring import CountingScorer, MockPolicy, MockScorer
from .world import DATA_DIR, Environment, load_environment, parse_goal, with_objects

BUNDLED_CORPORA = {"A": "env_a.json", "B": "env_b.json", "C": "env_c.json"}
MOCK_LATENCY_MS = 10.0


@dataclass(frozen=True)
class Scenario:
    id: str
    instruction: str
    goal: tuple
    min_steps: Mapping  # condition -> l_i
    labels: Mapping = field(default_factory=dict)
    objects: Mapping = field(default_factory=dict)
    mock_skills: tuple = ()
    mock_edges: object = ""  # str, or list of str per graph attempt
    env: Optional[str] = None

    def min_steps_for(self, condition) -> int:
        key = str(condition or "1")
        if key in self.min_steps:
            return int(self.min_steps[key])
        if "*" in self.min_steps:
            return int(self.min_steps["*"])
        raise ConfigInvalid(f"scenario {self.id} has no min_steps for condition {key}", field="min_steps")

    def label(self, env_name: str, condition) -> str:
        tag = "/".join(f"{k}{v}" for k, v in sorted(self.labels.items()))
        return f"{env_name}/{tag}/c{condition or 1}"

    def mock_scorer(self) -> MockScorer:
        return MockScorer(
            MockPolicy.from_plans({self.instruction: list(self.mock_skills)}),
            {self.instruction: self.mock_edges},
        )

    def world_for(self, env: Environment):
        return with_objects(env.world, self.objects) if self.objects else env.world


def _scenario(d: Mapping, i: int, default_env) -> Scenario:
    for key in ("id", "instruction", "goal", "min_steps"):
        if key not in d:
            raise ConfigInvalid("missing scenario field", field=f"scenarios[{i}].{key}")
    steps = d["min_steps"]
    steps = {"*": steps} if isinstance(steps, int) else {str(k): v for k, v in steps.items()}
    mock = d.get("mock", {})
    labels = {k: d[k] for k in ("group", "level") if k in d}
    return Scenario(
        id=d["id"],
        instruction=d["instruction"],
        goal=tuple(d["goal"]),
        min_steps=steps,
        labels=labels,
        objects=dict(d.get("objects", {})),
        mock_skills=tuple(mock.get("skills", ())),
        mock_edges=mock.get("edges", ""),
        env=d.get("env", default_env),
    )


def resolve_corpus_path(path) -> Path:
    key = str(path)
    if key.upper() in BUNDLED_CORPORA and not Path(key).exists():
        return DATA_DIR / "scenarios" / BUNDLED_CORPORA[key.upper()]
    return Path(key)


def load_corpus(path) -> list:
    """Load a scenario file holding one scenario or ``{"env": ..., "scenarios": [...]}``."""
    path = resolve_corpus_path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read scenario file {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno) from exc
    if "scenarios" in data:
        items, env = data["scenarios"], data.get("env")
    else:
        items, env = [data], data.get("env")
    out = [_scenario(d, i, env) for i, d in enumerate(items)]
    ids = [s.id for s in out]
    if len(set(ids)) != len(ids):
        raise ConfigInvalid("duplicate scenario ids", field="scenarios")
    return out


def run_scenario(scenario: Scenario, env: Environment, params: EpisodeParams = EpisodeParams(), scorer=None, clock=None) -> dict:
    """Run one scenario and return its trace as a JSON-ready dict.

    Without an explicit ``scorer`` the scenario's mock script is used and
    process time comes from a virtual clock of ``MOCK_LATENCY_MS`` per
    model call, so the trace is reproducible byte for byte.
    """
    world = scenario.world_for(env)
    try:
        goal = parse_goal(scenario.goal, world, scenario.instruction)
    except ValueError as exc:
        raise ConfigInvalid(str(exc), field=f"{scenario.id}.goal") from exc
    if scorer is None:
        counting = CountingScorer(scenario.mock_scorer(), MOCK_LATENCY_MS)
        scorer, clock = counting, counting.now_ms
    trace = run_episode(scenario.instruction, goal, env, scorer, params, world=world, clock=clock)
    cond = env.condition or "1"
    doc = {
        "scenario": scenario.id,
        "env": env.name,
        "condition": cond,
        "label": scenario.label(env.name, cond),
        "labels": dict(scenario.labels),
        "goal": list(scenario.goal),
        "min_steps": scenario.min_steps_for(cond),
    }
    doc.update(trace.to_dict())
    return doc


def load_scenario_env(scenario: Scenario, env_override=None, condition=None) -> Environment:
    source = env_override or scenario.env
    if source is None:
        raise ConfigInvalid(f"scenario {scenario.id} names no environment; pass --env", field="env")
    return load_environment(source, condition)
