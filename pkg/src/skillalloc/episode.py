"""The outer planning loop: decode, build the dependency graph, then
allocate and execute root skills round by round until the graph is empty."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .allocation import DEFAULT_ALPHA, build_weight_matrix, solve_assignment
from .decode import DEFAULT_MAX_LEN, build_skill_list
from .depgraph import DEFAULT_MAX_ATTEMPTS, generate_dependencies, remove_nodes, root_nodes
from .errors import (
    BackendUnavailable,
    Deadlock,
    GoalNotMet,
    PlanningError,
    RetryExhausted,
)
from .prompts import dependency_prompt, skill_prompt_parts
from .skills import STAY_SKILL, enumerate_skill_set, format_skill
from .world import SUCCESS, check_goal, execute_round

log = logging.getLogger(__name__)

DEFAULT_RETRY_CAP = 2


@dataclass(frozen=True)
class EpisodeParams:
    alpha: float = DEFAULT_ALPHA
    max_len: int = DEFAULT_MAX_LEN
    max_graph_attempts: int = DEFAULT_MAX_ATTEMPTS
    retry_cap: int = DEFAULT_RETRY_CAP


@dataclass
class RoundRecord:
    index: int
    assignments: list  # [{"robot", "node", "command", "outcome"}]
    world_hash: str

    def to_dict(self) -> dict:
        return {"round": self.index, "assignments": self.assignments, "world_hash": self.world_hash}


@dataclass
class PlanTrace:
    instruction: str
    skill_list: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    graph_attempts: int = 0
    rounds: list = field(default_factory=list)
    planning_time_ms: float = 0.0
    outcome: str = "failure"
    failure_reason: Optional[str] = None
    failure_detail: Optional[str] = None
    goal_satisfied: bool = False
    final_world_hash: str = ""

    @property
    def step_count(self) -> int:
        return len(self.rounds)

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    def to_dict(self) -> dict:
        return {
            "instruction": self.instruction,
            "skill_list": list(self.skill_list),
            "edges": [list(e) for e in self.edges],
            "graph_attempts": self.graph_attempts,
            "rounds": [r.to_dict() for r in self.rounds],
            "step_count": self.step_count,
            "planning_time_ms": round(self.planning_time_ms, 3),
            "outcome": self.outcome,
            "failure_reason": self.failure_reason,
            "failure_detail": self.failure_detail,
            "goal_satisfied": self.goal_satisfied,
            "final_world_hash": self.final_world_hash,
        }


def wall_clock_ms() -> float:
    return time.perf_counter() * 1000.0


def _fail(trace: PlanTrace, exc: PlanningError) -> PlanTrace:
    trace.outcome = "failure"
    trace.failure_reason = type(exc).__name__
    trace.failure_detail = str(exc)
    return trace


def run_episode(
    instruction: str,
    goal,
    env,
    scorer,
    params: EpisodeParams = EpisodeParams(),
    world=None,
    clock: Optional[Callable[[], float]] = None,
) -> PlanTrace:
    """Plan and simulate one instruction; failures end up in the trace, not raised.

    Backend outages are the exception: :class:`BackendUnavailable` propagates
    because it says nothing about the plan.
    """
    world = world if world is not None else env.world
    clock = clock or wall_clock_ms
    trace = PlanTrace(instruction)
    skill_set = enumerate_skill_set(world, env.templates)
    robots = sorted(world.robots)

    spent = 0.0
    t0 = clock()
    try:
        skills = build_skill_list(
            instruction, skill_set, scorer, params.max_len, skill_prompt_parts(env, instruction, world)
        )
        trace.skill_list = skills.commands()
        if not skills.items:
            spent += clock() - t0
            trace.planning_time_ms = spent
            trace.final_world_hash = world.hash()
            trace.goal_satisfied = check_goal(world, goal)
            if trace.goal_satisfied:
                trace.outcome = "success"
                return trace
            return _fail(trace, GoalNotMet("empty plan and the goal does not hold"))
        graph = generate_dependencies(
            instruction,
            skills.items,
            scorer,
            params.max_graph_attempts,
            prompt_for=lambda notes: dependency_prompt(instruction, skills.items, notes, n_robots=len(robots)),
        )
    except BackendUnavailable:
        raise
    except PlanningError as exc:
        trace.planning_time_ms = spent + clock() - t0
        trace.final_world_hash = world.hash()
        return _fail(trace, exc)
    spent += clock() - t0
    trace.edges = graph.sorted_edges()
    trace.graph_attempts = graph.attempts

    failures = {}
    try:
        while graph.nodes:
            t0 = clock()
            roots = root_nodes(graph)
            W = build_weight_matrix(robots, roots, graph.skill_of, world, params.alpha)
            if not W.feasible.any():
                blocked = ", ".join(f"{n}: {format_skill(graph.skill_of[n])}" for n in roots)
                raise Deadlock(f"no robot can execute any root skill ({blocked})")
            assignment = solve_assignment(W)
            spent += clock() - t0

            by_robot = assignment.as_dict()
            commands = {rid: graph.skill_of[by_robot[rid]] if rid in by_robot else STAY_SKILL for rid in robots}
            world, outcomes = execute_round(world, commands)
            done = []
            rows = []
            for rid in robots:
                node = by_robot.get(rid)
                rows.append({"robot": rid, "node": node, "command": format_skill(commands[rid]), "outcome": outcomes[rid]})
                if node is None:
                    continue
                if outcomes[rid] == SUCCESS:
                    done.append(node)
                else:
                    failures[node] = failures.get(node, 0) + 1
                    log.info("node %d failed (%s), attempt %d", node, outcomes[rid], failures[node])
            trace.rounds.append(RoundRecord(len(trace.rounds) + 1, rows, world.hash()))
            graph = remove_nodes(graph, done)
            over = sorted(n for n, c in failures.items() if c > params.retry_cap and n in graph.nodes)
            if over:
                raise RetryExhausted(
                    f"node {over[0]} ({format_skill(graph.skill_of[over[0]])}) failed {failures[over[0]]} times"
                )
    except PlanningError as exc:
        trace.planning_time_ms = spent
        trace.final_world_hash = world.hash()
        trace.goal_satisfied = check_goal(world, goal)
        return _fail(trace, exc)

    trace.planning_time_ms = spent
    trace.final_world_hash = world.hash()
    trace.goal_satisfied = check_goal(world, goal)
    if trace.goal_satisfied:
        trace.outcome = "success"
        return trace
    return _fail(trace, GoalNotMet("all skills executed but the goal does not hold"))


def node_rounds(trace_dict: dict) -> dict:
    """``{node: [round, ...]}`` for every attempt recorded in a trace dict."""
    out = {}
    for r in trace_dict["rounds"]:
        for a in r["assignments"]:
            if a["node"] is not None:
                out.setdefault(a["node"], []).append((r["round"], a["outcome"]))
    return out


def precedence_violations(trace_dict: dict) -> list:
    """Edges ``(i, j)`` where ``j`` was attempted before ``i`` had completed."""
    attempts = node_rounds(trace_dict)
    completed = {
        n: min(r for r, o in rs if o == SUCCESS) for n, rs in attempts.items() if any(o == SUCCESS for _, o in rs)
    }
    bad = []
    for i, j in trace_dict["edges"]:
        for r, _ in attempts.get(j, []):
            if i not in completed or completed[i] >= r:
                bad.append((i, j))
                break
    return bad
