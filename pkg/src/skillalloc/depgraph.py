"""Dependency graphs over skill-list indices.

Node ``i`` is the ``i``-th skill of the decoded list; edge ``(i, j)`` means
skill ``j`` cannot start until skill ``i`` has completed. Node identity is
the index, so two identical commands in one plan stay distinct.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .errors import CyclicAfterRetries, EdgeOutOfRange, EdgeTextError, SelfEdge, UnknownNode
from .prompts import EDGE_STOP, dependency_prompt
from .scoring import Scorer
from .skills import format_skill

DEFAULT_MAX_ATTEMPTS = 3

_EDGE_RE = re.compile(
    r"^\s*(?:[-*]\s+)?(?:v_?|skill_?)?(-?\d+)\s*(?:->|→|=>)\s*(?:v_?|skill_?)?(-?\d+)\s*[.;,]?\s*$"
)


@dataclass(frozen=True)
class DependencyGraph:
    nodes: frozenset
    edges: frozenset
    skill_of: Mapping = field(default_factory=dict, compare=False)
    attempts: int = field(default=1, compare=False)

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = frozenset(tuple(e) for e in self.edges)
        for i, j in edges:
            if i == j:
                raise SelfEdge(f"self-edge on node {i}")
            if i not in nodes or j not in nodes:
                raise UnknownNode(f"edge ({i}, {j}) references a node that is not in the graph")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def __len__(self):
        return len(self.nodes)

    def in_degree(self, node) -> int:
        return sum(1 for _, j in self.edges if j == node)

    def successors(self, node) -> list:
        return sorted(j for i, j in self.edges if i == node)

    def sorted_edges(self) -> list:
        return sorted(self.edges)


def build_graph(skills, edges) -> DependencyGraph:
    skills = list(skills)
    return DependencyGraph(frozenset(range(len(skills))), frozenset(edges), dict(enumerate(skills)))


def parse_edge_text(raw: str, list_len: int) -> frozenset:
    """Pull ``i -> j`` lines out of generated text; prose lines are skipped."""
    if list_len < 1:
        raise ValueError("list_len must be >= 1")
    edges = set()
    for line in raw.splitlines():
        m = _EDGE_RE.match(line)
        if not m:
            continue
        i, j = int(m.group(1)), int(m.group(2))
        for n in (i, j):
            if n < 0 or n >= list_len:
                raise EdgeOutOfRange(f"edge {i} -> {j} references node {n} outside 0..{list_len - 1}")
        if i == j:
            raise SelfEdge(f"self-edge {i} -> {j}")
        edges.add((i, j))
    return frozenset(edges)


def render_edges(edges) -> str:
    return "\n".join(f"{i} -> {j}" for i, j in sorted(edges))


def detect_cycle(g: DependencyGraph) -> Optional[list]:
    """Return the nodes of one directed cycle, or ``None`` for a DAG.

    Iterative depth-first search visiting nodes and successors in ascending
    order, so the witness is stable for a given graph.
    """
    adj = {n: [] for n in g.nodes}
    for i, j in sorted(g.edges):
        adj[i].append(j)
    state = dict.fromkeys(g.nodes, 0)  # 0 new, 1 on stack, 2 done
    for start in sorted(g.nodes):
        if state[start]:
            continue
        path = [start]
        iters = [iter(adj[start])]
        state[start] = 1
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                state[path.pop()] = 2
                iters.pop()
            elif state[nxt] == 1:
                return path[path.index(nxt):]
            elif state[nxt] == 0:
                state[nxt] = 1
                path.append(nxt)
                iters.append(iter(adj[nxt]))
    return None


def root_nodes(g: DependencyGraph) -> list:
    has_parent = {j for _, j in g.edges}
    return sorted(n for n in g.nodes if n not in has_parent)


def remove_nodes(g: DependencyGraph, done) -> DependencyGraph:
    done = set(done)
    unknown = done - g.nodes
    if unknown:
        raise UnknownNode(f"cannot remove nodes {sorted(unknown)}: not in graph")
    if not done:
        return g
    return DependencyGraph(
        g.nodes - done,
        frozenset((i, j) for i, j in g.edges if i not in done and j not in done),
        {n: s for n, s in g.skill_of.items() if n not in done},
        g.attempts,
    )


def cycle_note(cycle) -> str:
    loop = " -> ".join(map(str, list(cycle) + [cycle[0]]))
    return f"the previous dependencies contained the cycle {loop}; answer again without any cycle."


def generate_dependencies(
    instruction: str,
    skills,
    scorer: Scorer,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    prompt_for: Optional[Callable] = None,
) -> DependencyGraph:
    """Ask the backend for dependency edges until it gives an acyclic graph.

    ``prompt_for(notes)`` builds the prompt; each retry appends a note
    naming the cycle found in the previous answer.
    """
    skills = list(skills)
    if not skills:
        raise ValueError("cannot build a dependency graph for an empty skill list")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    if prompt_for is None:
        def prompt_for(notes):
            return dependency_prompt(instruction, skills, notes)

    notes = []
    cycle = None
    for attempt in range(1, max_attempts + 1):
        raw = scorer.complete(prompt_for(tuple(notes)), stop=EDGE_STOP)
        try:
            edges = parse_edge_text(raw, len(skills))
        except EdgeTextError as exc:
            raise type(exc)(str(exc), attempt=attempt) from exc
        g = build_graph(skills, edges)
        cycle = detect_cycle(g)
        if cycle is None:
            return DependencyGraph(g.nodes, g.edges, g.skill_of, attempt)
        notes.append(cycle_note(cycle))
    raise CyclicAfterRetries(max_attempts, cycle)


def to_dot(g: DependencyGraph, name: str = "dependencies") -> str:
    """DOT text with one node per skill (labelled by its command) and one line per edge."""
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for n in sorted(g.nodes):
        label = format_skill(g.skill_of[n]) if n in g.skill_of else str(n)
        label = label.replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  {n} [label="{n}: {label}"];')
    for i, j in sorted(g.edges):
        lines.append(f"  {i} -> {j};")
    lines.append("}")
    return "\n".join(lines) + "\n"
