"""Tabletop / household world: rooms, surfaces, stackable objects, robots.

The state is a plain immutable value. :func:`execute_round` returns a new
world rather than mutating, so a planning loop can keep old states around
for hashing and replay.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional

from .errors import ConfigInvalid, MalformedSkill
from .skills import STAY, SkillInstance, SkillTemplate, parse_skill

ARM = "arm"
MOBILE = "mobile"
DEFAULT_ARM_ZONES = ("grid", "tray", "counter")

DATA_DIR = Path(__file__).parent / "data"
BUNDLED_ENVS = {"A": "env_a.json", "B": "env_b.json", "C": "env_c.json"}


@dataclass(frozen=True)
class Room:
    name: str
    anchor: tuple
    connects: tuple = ()


@dataclass(frozen=True)
class Surface:
    name: str
    room: str
    zone: str
    position: tuple
    capacity: int = 1


@dataclass(frozen=True)
class WorldObject:
    name: str
    kind: str  # block | bowl
    color: str


@dataclass(frozen=True)
class Robot:
    id: str
    kind: str  # arm | mobile
    position: tuple
    home_room: str
    graspable: Optional[frozenset] = None  # None: no color restriction
    reach_zones: tuple = DEFAULT_ARM_ZONES

    def can_grasp(self, color: str) -> bool:
        return self.graspable is None or color in self.graspable


@dataclass(frozen=True)
class WorldState:
    rooms: Mapping
    surfaces: Mapping
    objects: Mapping
    robots: Mapping
    # object -> ("surface", name) | ("object", name) | ("robot", id)
    support: Mapping
    robot_room: Mapping
    carrying: Mapping = field(default_factory=dict)

    # -- queries ---------------------------------------------------------
    def children(self, name: str) -> list:
        return sorted(o for o, sup in self.support.items() if sup == ("object", name))

    def is_stack_top(self, obj: str) -> bool:
        return not self.children(obj)

    def occupants(self, surface: str) -> list:
        return sorted(o for o, sup in self.support.items() if sup == ("surface", surface))

    def base_surface(self, obj: str) -> Optional[str]:
        seen = set()
        cur = obj
        while True:
            kind, ref = self.support[cur]
            if kind == "surface":
                return ref
            if kind == "robot":
                return None
            if ref in seen:
                return None
            seen.add(ref)
            cur = ref

    def carrier(self, obj: str) -> Optional[str]:
        seen = set()
        cur = obj
        while cur not in seen:
            seen.add(cur)
            kind, ref = self.support[cur]
            if kind == "robot":
                return ref
            if kind == "surface":
                return None
            cur = ref
        return None

    def robot_position(self, rid: str) -> tuple:
        robot = self.robots[rid]
        if robot.kind == MOBILE:
            return self.rooms[self.robot_room[rid]].anchor
        return robot.position

    def object_position(self, obj: str) -> tuple:
        surface = self.base_surface(obj)
        if surface is not None:
            return self.surfaces[surface].position
        return self.robot_position(self.carrier(obj))

    def object_room(self, obj: str) -> str:
        surface = self.base_surface(obj)
        if surface is not None:
            return self.surfaces[surface].room
        return self.robot_room[self.carrier(obj)]

    def distance(self, rid: str, obj: str) -> float:
        (x0, y0), (x1, y1) = self.robot_position(rid), self.object_position(obj)
        return math.hypot(x1 - x0, y1 - y0)

    # -- integrity -------------------------------------------------------
    def check_invariants(self) -> None:
        """Raise ``ValueError`` if the stacking forest or occupancy rules are broken."""
        for obj, (kind, ref) in self.support.items():
            if kind == "object" and ref not in self.objects:
                raise ValueError(f"{obj} rests on unknown object {ref}")
            if kind == "surface" and ref not in self.surfaces:
                raise ValueError(f"{obj} rests on unknown surface {ref}")
            if kind == "robot" and self.carrying.get(ref) != obj:
                raise ValueError(f"{obj} claims to be carried by {ref}")
        for obj in self.objects:
            seen = {obj}
            cur = obj
            while self.support[cur][0] == "object":
                cur = self.support[cur][1]
                if cur in seen:
                    raise ValueError(f"stacking cycle through {obj}")
                seen.add(cur)
        for name, surface in self.surfaces.items():
            if len(self.occupants(name)) > surface.capacity:
                raise ValueError(f"surface {name} over capacity")
        for name, obj in self.objects.items():
            kids = self.children(name)
            if obj.kind == "block" and len(kids) > 1:
                raise ValueError(f"block {name} supports {len(kids)} objects")
        for rid, obj in self.carrying.items():
            if obj is not None and self.support.get(obj) != ("robot", rid):
                raise ValueError(f"{rid} carries {obj} but support disagrees")

    # -- identity --------------------------------------------------------
    def canonical(self) -> dict:
        return {
            "support": {o: list(self.support[o]) for o in sorted(self.support)},
            "robot_room": {r: self.robot_room[r] for r in sorted(self.robot_room)},
            "carrying": {r: self.carrying.get(r) for r in sorted(self.robots)},
        }

    def state_key(self) -> tuple:
        return (
            tuple(sorted(self.support.items())),
            tuple(sorted(self.robot_room.items())),
            tuple(sorted((r, o) for r, o in self.carrying.items() if o is not None)),
        )

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Environment:
    name: str
    world: WorldState
    templates: tuple
    conditions: Mapping
    prompt: Mapping
    goals: Mapping
    condition: Optional[str] = None

    def with_condition(self, condition) -> "Environment":
        return replace(self, world=apply_condition(self.world, self.conditions, condition), condition=str(condition))


# -- loading -------------------------------------------------------------

def _line_of(raw: str, needle: str) -> Optional[int]:
    idx = raw.find(needle)
    if idx < 0:
        return None
    return raw.count("\n", 0, idx) + 1


def _xy(value, where, raw):
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value)):
        raise ConfigInvalid(f"expected [x, y], got {value!r}", field=where, line=_line_of(raw, where.split(".")[-1]))
    return (float(value[0]), float(value[1]))


def resolve_env_path(env) -> Path:
    """Accept a bundled environment name (``A``/``B``/``C``) or a file path."""
    key = str(env)
    if key.upper() in BUNDLED_ENVS and not Path(key).exists():
        return DATA_DIR / "envs" / BUNDLED_ENVS[key.upper()]
    return Path(key)


def load_environment(path, condition=None) -> Environment:
    path = resolve_env_path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read environment config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    env = environment_from_dict(data, raw=raw, name=data.get("name", path.stem))
    if condition is not None:
        env = env.with_condition(condition)
    return env


def environment_from_dict(data: Mapping, raw: str = "", name: str = "env") -> Environment:
    if not isinstance(data, Mapping):
        raise ConfigInvalid("top level must be an object")
    for section in ("rooms", "surfaces", "objects", "robots", "skill_templates"):
        if section not in data:
            raise ConfigInvalid("missing section", field=section)

    rooms = {}
    for i, r in enumerate(data["rooms"]):
        rname = r.get("name")
        if not rname or rname in rooms:
            raise ConfigInvalid("room needs a unique name", field=f"rooms[{i}].name", line=_line_of(raw, str(rname)))
        rooms[rname] = Room(rname, _xy(r.get("anchor", [0, 0]), f"rooms[{i}].anchor", raw), tuple(r.get("connects", ())))
    for rname, room in rooms.items():
        for other in room.connects:
            if other not in rooms:
                raise ConfigInvalid(f"room {rname} connects to unknown room {other!r}", field="rooms.connects", line=_line_of(raw, other))
    # connections are symmetric
    links = {n: set(r.connects) for n, r in rooms.items()}
    for n, r in rooms.items():
        for other in r.connects:
            links[other].add(n)
    rooms = {n: replace(r, connects=tuple(sorted(links[n]))) for n, r in rooms.items()}

    surfaces = {}
    for i, s in enumerate(data["surfaces"]):
        sname = s.get("name")
        if not sname or sname in surfaces:
            raise ConfigInvalid("surface needs a unique name", field=f"surfaces[{i}].name", line=_line_of(raw, str(sname)))
        if s.get("room") not in rooms:
            raise ConfigInvalid(f"surface {sname!r} is in unknown room {s.get('room')!r}", field=f"surfaces[{i}].room", line=_line_of(raw, f'"{sname}"'))
        surfaces[sname] = Surface(
            sname, s["room"], s.get("zone", "grid"), _xy(s.get("position"), f"surfaces[{i}].position", raw), int(s.get("capacity", 1))
        )

    robots = {}
    robot_room = {}
    for i, r in enumerate(data["robots"]):
        rid = r.get("id")
        if not rid or rid in robots:
            raise ConfigInvalid("robot needs a unique id", field=f"robots[{i}].id", line=_line_of(raw, str(rid)))
        kind = r.get("kind")
        if kind not in (ARM, MOBILE):
            raise ConfigInvalid(f"robot kind must be arm or mobile, got {kind!r}", field=f"robots[{i}].kind", line=_line_of(raw, f'"{rid}"'))
        room = r.get("room")
        if room not in rooms:
            raise ConfigInvalid(f"robot {rid} is in unknown room {room!r}", field=f"robots[{i}].room", line=_line_of(raw, f'"{rid}"'))
        pos = _xy(r["position"], f"robots[{i}].position", raw) if "position" in r else rooms[room].anchor
        graspable = r.get("graspable")
        robots[rid] = Robot(
            rid, kind, pos, room,
            frozenset(graspable) if graspable is not None else None,
            tuple(r.get("reach_zones", DEFAULT_ARM_ZONES)),
        )
        robot_room[rid] = room

    objects, support, carrying = {}, {}, {rid: None for rid in robots}
    pending = []
    for i, o in enumerate(data["objects"]):
        oname = o.get("name")
        if not oname or oname in objects or oname in surfaces:
            raise ConfigInvalid("object needs a unique name distinct from surfaces", field=f"objects[{i}].name", line=_line_of(raw, str(oname)))
        if o.get("kind") not in ("block", "bowl"):
            raise ConfigInvalid(f"object kind must be block or bowl, got {o.get('kind')!r}", field=f"objects[{i}].kind", line=_line_of(raw, f'"{oname}"'))
        objects[oname] = WorldObject(oname, o["kind"], o.get("color", ""))
        pending.append((i, oname, o))
    for i, oname, o in pending:
        support[oname] = _placement(o, oname, i, surfaces, objects, robots, raw)
        if support[oname][0] == "robot":
            rid = support[oname][1]
            if carrying[rid] is not None:
                raise ConfigInvalid(f"robot {rid} cannot carry two objects", field=f"objects[{i}].carried_by", line=_line_of(raw, f'"{oname}"'))
            carrying[rid] = oname

    world = WorldState(rooms, surfaces, objects, robots, support, robot_room, carrying)
    try:
        world.check_invariants()
    except ValueError as exc:
        raise ConfigInvalid(str(exc), field="objects") from exc

    templates = []
    for i, t in enumerate(data["skill_templates"]):
        try:
            tpl = SkillTemplate.from_dict(t)
        except MalformedSkill as exc:
            raise ConfigInvalid(str(exc), field=f"skill_templates[{i}]", line=_line_of(raw, str(t.get("name")))) from exc
        if tpl.name not in SEMANTICS:
            raise ConfigInvalid(f"no execution semantics for skill {tpl.name!r}", field=f"skill_templates[{i}].name", line=_line_of(raw, f'"{tpl.name}"'))
        templates.append(tpl)

    conditions = {str(k): v for k, v in data.get("conditions", {}).items()}
    for key, cond in conditions.items():
        for rid in cond:
            if rid not in robots:
                raise ConfigInvalid(f"condition {key} constrains unknown robot {rid!r}", field=f"conditions.{key}", line=_line_of(raw, f'"{rid}"'))

    goals = {}
    for gname, preds in data.get("goals", {}).items():
        try:
            goals[gname] = parse_goal(preds, world)
        except (MalformedSkill, ValueError) as exc:
            raise ConfigInvalid(str(exc), field=f"goals.{gname}", line=_line_of(raw, f'"{gname}"')) from exc

    return Environment(name, world, tuple(templates), conditions, dict(data.get("prompt", {})), goals)


def _placement(o, oname, i, surfaces, objects, robots, raw):
    if "carried_by" in o:
        rid = o["carried_by"]
        if rid not in robots:
            raise ConfigInvalid(f"{oname} carried by unknown robot {rid!r}", field=f"objects[{i}].carried_by", line=_line_of(raw, f'"{oname}"'))
        return ("robot", rid)
    on = o.get("on")
    if on in surfaces:
        return ("surface", on)
    if on in objects and on != oname:
        return ("object", on)
    raise ConfigInvalid(f"{oname} is on nonexistent surface or object {on!r}", field=f"objects[{i}].on", line=_line_of(raw, f'"{oname}"'))


def apply_condition(world: WorldState, conditions: Mapping, condition) -> WorldState:
    if condition is None:
        return world
    key = str(condition)
    if key not in conditions:
        raise ConfigInvalid(f"unknown constraint condition {key!r}; available: {sorted(conditions)}", field="conditions")
    robots = dict(world.robots)
    for rid in robots:
        if robots[rid].kind == ARM and rid in conditions[key]:
            robots[rid] = replace(robots[rid], graspable=frozenset(conditions[key][rid]))
    return replace(world, robots=robots)


def with_objects(world: WorldState, overrides) -> WorldState:
    """Return a world whose object placements are replaced by ``overrides``.

    ``overrides`` maps object name to ``{"on": ...}`` or ``{"carried_by": ...}``.
    """
    support = dict(world.support)
    carrying = {rid: None for rid in world.robots}
    raw = ""
    for name, spec in overrides.items():
        if name not in world.objects:
            raise ConfigInvalid(f"override names unknown object {name!r}", field="objects")
        support[name] = _placement(spec, name, name, world.surfaces, world.objects, world.robots, raw)
    for obj, (kind, ref) in support.items():
        if kind == "robot":
            if carrying[ref] is not None:
                raise ConfigInvalid(f"robot {ref} cannot carry two objects", field="objects")
            carrying[ref] = obj
    new = replace(world, support=support, carrying=carrying)
    try:
        new.check_invariants()
    except ValueError as exc:
        raise ConfigInvalid(str(exc), field="objects") from exc
    return new


# -- feasibility ----------------------------------------------------------

def _target_token(world, target):
    if target in world.surfaces:
        return ("surface", target)
    return ("object", target)


def _valid_placement(world, obj, target, room, zones):
    """Reason string for placing ``obj`` onto ``target`` within ``room``/``zones``; ``ok`` if allowed."""
    if target in world.surfaces:
        s = world.surfaces[target]
        if s.room != room or (zones is not None and s.zone not in zones):
            return "out-of-reach"
        others = [o for o in world.occupants(target) if o != obj]
        if len(others) >= s.capacity:
            return "target-occupied"
        return "ok"
    if target not in world.objects:
        return "unknown-entity"
    if target == obj:
        return "invalid-target"
    if world.carrier(target) is not None:
        return "invalid-target"
    base = world.base_surface(target)
    s = world.surfaces[base]
    if s.room != room or (zones is not None and s.zone not in zones):
        return "out-of-reach"
    # refuse placing an object somewhere inside its own stack
    cur = target
    while world.support[cur][0] == "object":
        cur = world.support[cur][1]
        if cur == obj:
            return "invalid-target"
    tkind = world.objects[target].kind
    okind = world.objects[obj].kind
    if tkind == "bowl":
        return "ok" if okind == "block" else "invalid-target"
    if okind == "bowl":
        return "invalid-target"
    kids = [c for c in world.children(target) if c != obj]
    return "target-occupied" if kids else "ok"


def _feasible_pick_and_place(world, robot, skill):
    obj, target = skill.args
    if obj not in world.objects:
        return False, "unknown-entity"
    if not robot.can_grasp(world.objects[obj].color):
        return False, "grasp-constraint"
    if world.carrier(obj) is not None:
        return False, "carried"
    base = world.base_surface(obj)
    s = world.surfaces[base]
    if s.room != robot.home_room or s.zone not in robot.reach_zones:
        return False, "out-of-reach"
    if not world.is_stack_top(obj):
        return False, "not-stack-top"
    reason = _valid_placement(world, obj, target, robot.home_room, robot.reach_zones)
    return reason == "ok", reason


def _feasible_pick_up(world, robot, skill):
    (obj,) = skill.args
    if obj not in world.objects:
        return False, "unknown-entity"
    if world.carrying.get(robot.id) is not None:
        return False, "hands-full"
    if not robot.can_grasp(world.objects[obj].color):
        return False, "grasp-constraint"
    if world.carrier(obj) is not None:
        return False, "carried"
    if world.object_room(obj) != world.robot_room[robot.id]:
        return False, "out-of-reach"
    if not world.is_stack_top(obj):
        return False, "not-stack-top"
    return True, "ok"


def _feasible_put_down(world, robot, skill):
    (target,) = skill.args
    obj = world.carrying.get(robot.id)
    if obj is None:
        return False, "empty-handed"
    if target not in world.surfaces and target not in world.objects:
        return False, "unknown-entity"
    reason = _valid_placement(world, obj, target, world.robot_room[robot.id], None)
    return reason == "ok", reason


def _feasible_move_to(world, robot, skill):
    (room,) = skill.args
    if room not in world.rooms:
        return False, "unknown-entity"
    here = world.robot_room[robot.id]
    if room == here:
        return False, "already-there"
    if room not in world.rooms[here].connects:
        return False, "not-connected"
    return True, "ok"


# skill name -> (robot kind, feasibility check)
SEMANTICS = {
    "pick_and_place": (ARM, _feasible_pick_and_place),
    "pick_up": (MOBILE, _feasible_pick_up),
    "put_down": (MOBILE, _feasible_put_down),
    "move_to": (MOBILE, _feasible_move_to),
}


def skill_robot_kind(skill: SkillInstance) -> Optional[str]:
    entry = SEMANTICS.get(skill.name)
    return entry[0] if entry else None


def feasible(robot, skill: SkillInstance, world: WorldState) -> tuple:
    """Whether ``robot`` can execute ``skill`` in ``world`` right now, plus a reason tag."""
    if isinstance(robot, str):
        robot = world.robots[robot]
    if skill.is_stay:
        return True, "ok"
    if skill.is_done:
        return False, "terminal"
    entry = SEMANTICS.get(skill.name)
    if entry is None:
        return False, "unknown-skill"
    kind, check = entry
    if robot.kind != kind:
        return False, "kind-mismatch"
    try:
        return check(world, robot, skill)
    except ValueError:
        return False, "arity"


# -- execution ------------------------------------------------------------

def _effects(world, rid, skill):
    """Return (support updates, carry updates, room updates, exclusive tokens, shared tokens)."""
    if skill.name == "pick_and_place":
        obj, target = skill.args
        tok = _target_token(world, target)
        excl = {("object", obj), world.support[obj]}
        shared = set()
        if tok[0] == "object" and world.objects[target].kind == "bowl":
            shared.add(tok)
        else:
            excl.add(tok)
        return {obj: tok}, {}, {}, excl, shared
    if skill.name == "pick_up":
        (obj,) = skill.args
        return {obj: ("robot", rid)}, {rid: obj}, {}, {("object", obj), world.support[obj]}, set()
    if skill.name == "put_down":
        (target,) = skill.args
        obj = world.carrying[rid]
        tok = _target_token(world, target)
        excl, shared = {("object", obj)}, set()
        if tok[0] == "object" and world.objects[target].kind == "bowl":
            shared.add(tok)
        else:
            excl.add(tok)
        return {obj: tok}, {rid: None}, {}, excl, shared
    if skill.name == "move_to":
        (room,) = skill.args
        return {}, {}, {rid: room}, set(), set()
    return {}, {}, {}, set(), set()


SUCCESS = "success"
IDLE = "idle"
CONFLICT = "conflict"


def execute_round(world: WorldState, assignment: Mapping) -> tuple:
    """Apply ``{robot id: SkillInstance}`` simultaneously against the pre-round world.

    Returns ``(new world, {robot id: outcome})``. Outcomes are ``success``,
    ``idle``, ``conflict`` or ``infeasible:<reason>``. Skills that touch a
    shared cell, stack or object fail together and leave no trace.
    """
    outcomes = {}
    planned = {}
    for rid in sorted(assignment):
        skill = assignment[rid]
        if rid not in world.robots:
            raise KeyError(f"unknown robot {rid!r}")
        if skill.is_stay:
            outcomes[rid] = IDLE
            continue
        ok, reason = feasible(rid, skill, world)
        if not ok:
            outcomes[rid] = f"infeasible:{reason}"
            continue
        planned[rid] = _effects(world, rid, skill)

    rids = sorted(planned)
    clashing = set()
    for i, a in enumerate(rids):
        ea, sa = planned[a][3], planned[a][4]
        for b in rids[i + 1 :]:
            eb, sb = planned[b][3], planned[b][4]
            if ea & (eb | sb) or eb & sa:
                clashing.update((a, b))

    support = dict(world.support)
    carrying = dict(world.carrying)
    robot_room = dict(world.robot_room)
    for rid in rids:
        if rid in clashing:
            outcomes[rid] = CONFLICT
            continue
        sup, carry, rooms, _, _ = planned[rid]
        support.update(sup)
        carrying.update(carry)
        robot_room.update(rooms)
        outcomes[rid] = SUCCESS
    for rid in world.robots:
        outcomes.setdefault(rid, IDLE)
    new = replace(world, support=support, carrying=carrying, robot_room=robot_room)
    return new, outcomes


# -- goals ----------------------------------------------------------------

GOAL_PREDICATES = {"on": 2, "at": 2, "in": 2}


@dataclass(frozen=True)
class GoalSpec:
    predicates: tuple = ()
    instruction: str = ""

    def render(self) -> list:
        return [f"{p.name}({', '.join(p.args)})" for p in self.predicates]


def parse_goal(preds, world: WorldState, instruction: str = "") -> GoalSpec:
    if isinstance(preds, GoalSpec):
        return preds
    out = []
    for text in preds:
        p = parse_skill(text)
        if p.name not in GOAL_PREDICATES:
            raise ValueError(f"unknown goal predicate {p.name!r}")
        if len(p.args) != GOAL_PREDICATES[p.name]:
            raise ValueError(f"{p.name} takes 2 arguments")
        x, y = p.args
        if x not in world.objects:
            raise ValueError(f"goal references unknown object {x!r}")
        if p.name == "at" and y not in world.surfaces:
            raise ValueError(f"goal references unknown location {y!r}")
        if p.name in ("on", "in") and y not in world.objects:
            raise ValueError(f"goal references unknown object {y!r}")
        if p.name == "in" and world.objects[y].kind != "bowl":
            raise ValueError(f"in() target {y!r} is not a bowl")
        out.append(p)
    return GoalSpec(tuple(out), instruction)


def check_goal(world: WorldState, goal: GoalSpec) -> bool:
    for p in goal.predicates:
        x, y = p.args
        sup = world.support.get(x)
        if p.name == "at" and sup != ("surface", y):
            return False
        if p.name in ("on", "in") and sup != ("object", y):
            return False
    return True


def goal_entities(goal: GoalSpec) -> set:
    return {a for p in goal.predicates for a in p.args}


def stay_assignment(world: WorldState) -> dict:
    return {rid: SkillInstance(STAY) for rid in world.robots}
