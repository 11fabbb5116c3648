"""Skill grammar: text commands like ``pick_and_place(red block, middle)``.

Templates come from the environment config; :func:`enumerate_skill_set`
instantiates them against a world to get the closed vocabulary the
decoder is allowed to choose from.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import EmptyDomain, MalformedSkill, UnknownSkillName

DONE = "done"
STAY = "stay"
BUILTIN_NAMES = (DONE, STAY)

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class SkillInstance:
    name: str
    args: tuple = ()
    # object-ref | location-ref | literal, aligned with args; not part of identity
    arg_kinds: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return format_skill(self)

    @property
    def is_done(self) -> bool:
        return self.name == DONE and not self.args

    @property
    def is_stay(self) -> bool:
        return self.name == STAY and not self.args


DONE_SKILL = SkillInstance(DONE)
STAY_SKILL = SkillInstance(STAY)


@dataclass(frozen=True)
class ArgDomain:
    """Filter selecting the world entities one template argument ranges over.

    ``role`` is ``object`` (movable objects), ``location`` (surfaces and,
    optionally, objects that can receive a placement) or ``room``.
    """

    role: str
    object_kinds: tuple = ()
    colors: tuple = ()
    zones: tuple = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "ArgDomain":
        role = data.get("role")
        if role not in ("object", "location", "room"):
            raise MalformedSkill(f"unknown argument role {role!r}")
        return cls(
            role=role,
            object_kinds=tuple(data.get("object_kinds", ())),
            colors=tuple(data.get("colors", ())),
            zones=tuple(data.get("zones", ())),
        )

    def values(self, world) -> list:
        out = []
        if self.role == "room":
            out.extend(world.rooms)
        else:
            if self.role == "location":
                out.extend(
                    name for name, s in world.surfaces.items() if not self.zones or s.zone in self.zones
                )
            for name, obj in world.objects.items():
                if self.object_kinds and obj.kind not in self.object_kinds:
                    continue
                if self.colors and obj.color not in self.colors:
                    continue
                out.append(name)
        return sorted(set(out))


@dataclass(frozen=True)
class SkillTemplate:
    name: str
    params: tuple
    robot_kinds: tuple = ()
    distinct_args: bool = True
    description: str = ""

    @property
    def arity(self) -> int:
        return len(self.params)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SkillTemplate":
        name = data.get("name", "")
        if not isinstance(name, str) or not _NAME_RE.fullmatch(name):
            raise MalformedSkill(f"invalid template name {name!r}")
        if name in BUILTIN_NAMES:
            raise MalformedSkill(f"{name!r} is a built-in skill and cannot be redeclared")
        return cls(
            name=name,
            params=tuple(ArgDomain.from_dict(p) for p in data.get("params", ())),
            robot_kinds=tuple(data.get("robot_kinds", ())),
            distinct_args=bool(data.get("distinct_args", True)),
            description=data.get("description", ""),
        )

    def signature(self) -> str:
        return f"{self.name}({', '.join(p.role for p in self.params)})"


@dataclass(frozen=True)
class SkillSet:
    templates: tuple
    instances: tuple
    object_names: frozenset = frozenset()

    def __contains__(self, skill) -> bool:
        return skill in self._index

    def __len__(self):
        return len(self.instances)

    @property
    def _index(self) -> dict:
        # cached lazily; the dataclass is frozen so bypass __setattr__
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {s: i for i, s in enumerate(self.instances)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def index(self, skill: SkillInstance) -> int:
        return self._index[skill]

    def template(self, name: str) -> Optional[SkillTemplate]:
        for t in self.templates:
            if t.name == name:
                return t
        return None

    @property
    def vocabulary(self) -> tuple:
        return tuple(t.name for t in self.templates) + BUILTIN_NAMES

    def decode_candidates(self) -> tuple:
        """Every instance except ``stay()``, which only fills idle robots."""
        return tuple(s for s in self.instances if not s.is_stay)


def format_skill(skill: SkillInstance) -> str:
    return f"{skill.name}({', '.join(skill.args)})"


def _split_top_level(body: str, text: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise MalformedSkill(f"unbalanced parentheses in {text!r}")
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise MalformedSkill(f"unbalanced parentheses in {text!r}")
    parts.append("".join(cur))
    return parts


def parse_skill(text: str, skill_set: Optional[SkillSet] = None) -> SkillInstance:
    """Parse ``name(arg1, arg2)`` into a :class:`SkillInstance`.

    Arguments are split on top-level commas only, so multi-word names
    such as ``red block`` survive. Internal whitespace runs collapse to a
    single space. With a ``skill_set`` the name must be in its vocabulary
    and the arity must match the template.
    """
    if not isinstance(text, str):
        raise MalformedSkill(f"skill text must be str, got {type(text).__name__}")
    s = text.strip()
    open_at = s.find("(")
    if open_at < 0 or not s.endswith(")"):
        raise MalformedSkill(f"unbalanced parentheses in {text!r}")
    name = s[:open_at].strip()
    if not name:
        raise MalformedSkill(f"empty skill name in {text!r}")
    if not _NAME_RE.fullmatch(name):
        raise MalformedSkill(f"invalid skill name {name!r}")
    body = s[open_at + 1 : -1]
    if body.strip():
        args = [_WS_RE.sub(" ", a.strip()) for a in _split_top_level(body, text)]
        if any(not a for a in args):
            raise MalformedSkill(f"empty argument in {text!r}")
    else:
        _split_top_level(body, text)
        args = []

    if name in BUILTIN_NAMES:
        if args:
            raise MalformedSkill(f"{name}() takes no arguments, got {len(args)}")
        return SkillInstance(name)

    kinds = ("literal",) * len(args)
    if skill_set is not None:
        template = skill_set.template(name)
        if template is None:
            raise UnknownSkillName(f"{name!r} is not in the skill vocabulary")
        if len(args) != template.arity:
            raise MalformedSkill(
                f"{name} expects {template.arity} argument(s), got {len(args)}"
            )
        kinds = tuple(
            "object-ref" if a in skill_set.object_names else "location-ref" if p.role != "object" else "literal"
            for a, p in zip(args, template.params)
        )
    return SkillInstance(name, tuple(args), kinds)


def enumerate_skill_set(world, templates: Iterable[SkillTemplate]) -> SkillSet:
    """Instantiate every template against ``world``.

    Order is template order, then the lexicographic order of argument
    tuples; ``done()`` and ``stay()`` close the list.
    """
    templates = tuple(templates)
    object_names = frozenset(world.objects)
    seen = set()
    instances = []
    for t in templates:
        domains = []
        for pos, p in enumerate(t.params):
            values = p.values(world)
            if not values:
                raise EmptyDomain(
                    f"template {t.signature()} argument {pos} ({p.role}) matches nothing in the world",
                    field=f"skill_templates.{t.name}",
                )
            domains.append(values)
        for combo in itertools.product(*domains):
            if t.distinct_args and len(set(combo)) < len(combo):
                continue
            kinds = tuple(
                "object-ref" if a in object_names else "location-ref" for a in combo
            )
            inst = SkillInstance(t.name, combo, kinds)
            if inst not in seen:
                seen.add(inst)
                instances.append(inst)
    instances.extend([DONE_SKILL, STAY_SKILL])
    return SkillSet(templates, tuple(instances), object_names)


def skill_object(skill: SkillInstance, skill_set_or_templates) -> Optional[str]:
    """Name of the object a skill grasps, if its template has an object argument."""
    templates = getattr(skill_set_or_templates, "templates", skill_set_or_templates)
    for t in templates:
        if t.name == skill.name:
            for a, p in zip(skill.args, t.params):
                if p.role == "object":
                    return a
    return None


def parse_many(lines: Sequence[str], skill_set: Optional[SkillSet] = None) -> list:
    return [parse_skill(line, skill_set) for line in lines]
