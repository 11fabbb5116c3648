"""Robot/skill weights and the optimal one-to-one assignment between them.

Arm robots score a skill by how far they are from the object it grasps
(``1 - alpha * normalized distance``); mobile robots score 1 if they can
execute the skill and 0 otherwise. The assignment maximizes the total
weight with each robot and each skill used at most once. Pairs outside
the feasibility mask are forbidden outright, not merely worth zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import NegativeDistance, OutOfRange, UnknownNode, UnknownRobot
from .world import ARM, MOBILE, feasible

DEFAULT_ALPHA = 0.3
TIE_EPS = 1e-12
_END = (math.inf, math.inf)


@dataclass(frozen=True)
class WeightMatrix:
    weights: np.ndarray
    feasible: np.ndarray
    robot_ids: tuple
    skill_node_ids: tuple
    reasons: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        f = np.asarray(self.feasible, dtype=bool)
        n, m = len(self.robot_ids), len(self.skill_node_ids)
        w = w.reshape(n, m)
        f = f.reshape(n, m)
        if not np.all(np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
            raise OutOfRange("weights must lie in [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feasible", f)
        object.__setattr__(self, "robot_ids", tuple(self.robot_ids))
        object.__setattr__(self, "skill_node_ids", tuple(self.skill_node_ids))

    @property
    def shape(self):
        return self.weights.shape

    @classmethod
    def from_arrays(cls, weights, feasible=None) -> "WeightMatrix":
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 2:
            w = w.reshape(w.shape[0] if w.ndim else 0, -1)
        f = np.ones_like(w, dtype=bool) if feasible is None else np.asarray(feasible, dtype=bool)
        return cls(w, f, tuple(range(w.shape[0])), tuple(range(w.shape[1])))


@dataclass(frozen=True)
class Assignment:
    pairs: tuple  # sorted (robot id, node id)
    idle: tuple
    objective: float

    def as_dict(self) -> dict:
        return dict(self.pairs)


# -- weights --------------------------------------------------------------

def normalize_distances(d: Sequence[float]) -> list:
    """Min-max scale to [0, 1]; a constant input maps to all zeros."""
    d = [float(x) for x in d]
    for x in d:
        if x < 0 or math.isnan(x):
            raise NegativeDistance(f"distance must be >= 0, got {x}")
    if not d:
        return []
    lo, hi = min(d), max(d)
    if hi == lo:
        return [0.0] * len(d)
    span = hi - lo
    return [(x - lo) / span for x in d]


def arm_weight(d_norm: float, alpha: float = DEFAULT_ALPHA) -> float:
    if not 0.0 <= d_norm <= 1.0:
        raise OutOfRange(f"normalized distance {d_norm} outside [0, 1]")
    if not 0.0 <= alpha <= 1.0:
        raise OutOfRange(f"alpha {alpha} outside [0, 1]")
    return 1.0 - alpha * d_norm


def mobile_weight(executable: bool) -> float:
    return 1.0 if executable else 0.0


def grasp_object(skill, world, rid):
    if skill.name in ("pick_and_place", "pick_up"):
        return skill.args[0]
    if skill.name == "put_down":
        return world.carrying.get(rid)
    return None


def build_weight_matrix(robot_ids, candidate_nodes, skill_of: Mapping, world, alpha: float = DEFAULT_ALPHA) -> WeightMatrix:
    """Weights for every (robot, candidate node) pair in the current world.

    Distances are min-max normalized over all feasible arm pairs of the
    round, then fed through :func:`arm_weight`.
    """
    robot_ids = tuple(robot_ids)
    nodes = tuple(candidate_nodes)
    for rid in robot_ids:
        if rid not in world.robots:
            raise UnknownRobot(f"unknown robot {rid!r}")
    for k in nodes:
        if k not in skill_of:
            raise UnknownNode(f"unknown skill node {k!r}")
    n, m = len(robot_ids), len(nodes)
    w = np.zeros((n, m))
    f = np.zeros((n, m), dtype=bool)
    reasons = [[""] * m for _ in range(n)]
    arm_pairs, arm_dist = [], []
    for j, rid in enumerate(robot_ids):
        robot = world.robots[rid]
        for k, node in enumerate(nodes):
            skill = skill_of[node]
            ok, reason = feasible(robot, skill, world)
            reasons[j][k] = reason
            if not ok:
                continue
            f[j, k] = True
            if robot.kind == ARM:
                obj = grasp_object(skill, world, rid)
                arm_pairs.append((j, k))
                arm_dist.append(world.distance(rid, obj) if obj is not None else 0.0)
            elif robot.kind == MOBILE:
                w[j, k] = mobile_weight(True)
    for (j, k), d in zip(arm_pairs, normalize_distances(arm_dist)):
        w[j, k] = arm_weight(d, alpha)
    return WeightMatrix(w, f, robot_ids, nodes, tuple(tuple(r) for r in reasons))


# -- assignment -----------------------------------------------------------

def _best(a: np.ndarray, rows: list, cols: list):
    """Max total of ``a`` over a one-to-one matching of ``rows`` and ``cols``."""
    if not rows or not cols:
        return 0.0, []
    sub = a[np.ix_(rows, cols)]
    if len(rows) <= len(cols):
        col = kernels.solve_min(-sub)
        pairs = [(rows[i], cols[c]) for i, c in enumerate(col)]
    else:
        row = kernels.solve_min(-sub.T)
        pairs = [(rows[r], cols[i]) for i, r in enumerate(row)]
    return math.fsum(a[j, k] for j, k in pairs), pairs


def solve_assignment(W: WeightMatrix) -> Assignment:
    """Exact maximum-weight assignment with a deterministic tie-break.

    Among optimal pair sets the one whose sorted pair list is
    lexicographically smallest wins, where running out of pairs compares
    larger than any pair. Equivalently: scan pairs in (robot, node) order
    and keep each one that some optimal assignment still contains.
    """
    n, m = W.shape
    feas = W.feasible
    a = np.where(feas, W.weights, 0.0)
    rows, cols = list(range(n)), list(range(m))
    _, pairs = _best(a, rows, cols)
    current = {(j, k) for j, k in pairs if feas[j, k]}
    chosen = []
    free_rows, free_cols = set(rows), set(cols)
    for j in rows:
        for k in cols:
            if not feas[j, k] or j not in free_rows or k not in free_cols:
                continue
            if (j, k) not in current:
                target = math.fsum(a[p] for p in current if p[0] in free_rows)
                val, rest = _best(a, sorted(free_rows - {j}), sorted(free_cols - {k}))
                if a[j, k] + val < target - TIE_EPS * max(1.0, target):
                    continue
                current = set(chosen) | {(j, k)} | {(r, c) for r, c in rest if feas[r, c]}
            chosen.append((j, k))
            free_rows.discard(j)
            free_cols.discard(k)
    return _assignment_from(W, chosen)


def _assignment_from(W: WeightMatrix, idx_pairs) -> Assignment:
    idx_pairs = sorted(idx_pairs)
    used = {j for j, _ in idx_pairs}
    pairs = tuple((W.robot_ids[j], W.skill_node_ids[k]) for j, k in idx_pairs)
    idle = tuple(W.robot_ids[j] for j in range(W.shape[0]) if j not in used)
    return Assignment(pairs, idle, math.fsum(W.weights[j, k] for j, k in idx_pairs))


def brute_force_assignment(W: WeightMatrix) -> Assignment:
    """Exhaustive search over every valid 0/1 assignment; the oracle for small matrices."""
    n, m = W.shape
    options = [[None] + [k for k in range(m) if W.feasible[j, k]] for j in range(n)]
    best_val, best_key, best = -math.inf, None, []
    for choice in itertools.product(*options):
        taken = [k for k in choice if k is not None]
        if len(taken) != len(set(taken)):
            continue
        idx_pairs = [(j, k) for j, k in enumerate(choice) if k is not None]
        val = math.fsum(W.weights[j, k] for j, k in idx_pairs)
        key = idx_pairs + [_END]
        if val > best_val + TIE_EPS * max(1.0, best_val):
            best_val, best_key, best = val, key, idx_pairs
        elif val >= best_val - TIE_EPS * max(1.0, best_val) and key < best_key:
            best_key, best = key, idx_pairs
            best_val = max(best_val, val)
    return _assignment_from(W, best)


def max_objective(W: WeightMatrix) -> float:
    """Largest achievable objective by enumeration (no tie-break involved)."""
    n, m = W.shape
    options = [[None] + [k for k in range(m) if W.feasible[j, k]] for j in range(n)]
    best = 0.0
    for choice in itertools.product(*options):
        taken = [k for k in choice if k is not None]
        if len(taken) != len(set(taken)):
            continue
        best = max(best, math.fsum(W.weights[j, k] for j, k in enumerate(choice) if k is not None))
    return best
