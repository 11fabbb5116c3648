"""Breadth-first search for the fewest synchronous rounds that reach a goal.

Used to cross-check the minimum step counts authored in scenario files.
The search only considers moves that could matter: goal objects (and
whatever sits on top of them) going to goal-mentioned targets, blockers
going to free grid cells, pickups of goal objects and room changes. It
assumes no optimal plan parks a goal object somewhere temporarily, which
holds for the bundled scenarios.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Optional

from .skills import STAY_SKILL, SkillInstance
from .world import ARM, CONFLICT, MOBILE, SUCCESS, check_goal, execute_round, feasible, goal_entities


def _relevant(world, goal):
    named = goal_entities(goal)
    subjects = {p.args[0] for p in goal.predicates}
    movers = set(subjects)
    targets = {e for e in named if e not in subjects or e in world.objects}
    # anything stacked on a goal object or sitting on a goal surface may have to move away
    blockers = set()
    frontier = [e for e in named if e in world.objects] + [
        o for s in named if s in world.surfaces for o in world.occupants(s)
    ]
    while frontier:
        cur = frontier.pop()
        for above in world.children(cur):
            if above not in blockers:
                blockers.add(above)
                frontier.append(above)
        if cur not in subjects and cur in world.objects:
            blockers.add(cur)
    blockers -= subjects
    return sorted(movers), sorted(blockers), sorted(targets)


def _candidates(world, rid, movers, blockers, targets):
    robot = world.robots[rid]
    out = [STAY_SKILL]
    if robot.kind == ARM:
        for obj in movers:
            for t in targets:
                out.append(SkillInstance("pick_and_place", (obj, t)))
        grid = [s for s, surf in world.surfaces.items() if surf.zone in ("grid", "counter")]
        for obj in blockers:
            for t in grid:
                out.append(SkillInstance("pick_and_place", (obj, t)))
    elif robot.kind == MOBILE:
        out.extend(SkillInstance("pick_up", (obj,)) for obj in movers + blockers)
        out.extend(SkillInstance("put_down", (t,)) for t in targets)
        out.extend(SkillInstance("move_to", (room,)) for room in sorted(world.rooms))
    return [s for s in out if feasible(robot, s, world)[0]]


def _unsatisfied(world, goal) -> int:
    return sum(1 for p in goal.predicates if not check_goal(world, type(goal)((p,))))


def _closes_predicate(world, rid, skill, goal) -> bool:
    new, _ = execute_round(world, {rid: skill})
    for p in goal.predicates:
        one = type(goal)((p,))
        if check_goal(new, one) and not check_goal(world, one):
            return True
    return False


def min_rounds(world, goal, max_depth: int = 10) -> Optional[int]:
    """Fewest rounds from ``world`` to a state satisfying ``goal``, or ``None`` past ``max_depth``.

    A robot changes at most one support per round, so a state with ``u``
    unsatisfied predicates needs at least ``ceil(u / robots)`` more rounds;
    states that cannot finish within ``max_depth`` are pruned.
    """
    if check_goal(world, goal):
        return 0
    movers, blockers, targets = _relevant(world, goal)
    robots = sorted(world.robots)
    n = len(robots)
    seen = {world.state_key()}
    queue = deque([(world, 0)])
    while queue:
        state, depth = queue.popleft()
        if depth >= max_depth:
            continue
        options = [_candidates(state, rid, movers, blockers, targets) for rid in robots]
        if depth + 1 == max_depth:
            # last round: a move that satisfies no open predicate cannot help
            options = [
                [s for s in opts if s.is_stay or _closes_predicate(state, rid, s, goal)]
                for rid, opts in zip(robots, options)
            ]
        for combo in itertools.product(*options):
            if all(s.is_stay for s in combo):
                continue
            new, outcomes = execute_round(state, dict(zip(robots, combo)))
            if any(o == CONFLICT for o in outcomes.values()):
                continue
            if not any(o == SUCCESS for o in outcomes.values()):
                continue
            key = new.state_key()
            if key in seen:
                continue
            if check_goal(new, goal):
                return depth + 1
            seen.add(key)
            if depth + 1 + -(-_unsatisfied(new, goal) // n) > max_depth:
                continue
            queue.append((new, depth + 1))
    return None
