"""Language-model scoring backends and prompt assembly.

A backend does two things: score a fixed list of candidate continuations
of a prompt (log-likelihoods, used by the skill decoder) and produce a
free-text completion (used for dependency edges).

The mock backend is a pure function of the request and its script. It
recovers the decode step from the prompt itself, so it needs no call
counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import NoScriptedCompletion, ScoringMismatch
from .skills import format_skill

INSTRUCTION_PREFIX = "Instruction: "
RETRY_NOTE_PREFIX = "Note: "


@dataclass(frozen=True)
class ScoreRequest:
    prompt: str
    candidates: tuple

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError("score request needs at least one candidate")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("score request candidates must be unique")


@dataclass(frozen=True)
class ScoreVector:
    log_scores: tuple

    def argmax(self) -> int:
        """Index of the best score; ties go to the lowest index."""
        best = 0
        for i, v in enumerate(self.log_scores):
            if v > self.log_scores[best]:
                best = i
        return best


def validate_scores(req: ScoreRequest, values: Sequence[float]) -> ScoreVector:
    values = list(values)
    if len(values) != len(req.candidates):
        raise ScoringMismatch(f"backend returned {len(values)} scores for {len(req.candidates)} candidates")
    out = []
    for i, v in enumerate(values):
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise ScoringMismatch(f"score {i} is not a number: {v!r}") from None
        if not math.isfinite(f):
            raise ScoringMismatch(f"score {i} for {req.candidates[i]!r} is not finite")
        out.append(f)
    return ScoreVector(tuple(out))


def truncate_at_stop(text: str, stop: Optional[str]) -> str:
    if stop:
        cut = text.find(stop)
        if cut >= 0:
            return text[:cut]
    return text


class Scorer:
    """Backend interface. Subclasses implement ``_score`` and ``_complete``."""

    def score(self, req: ScoreRequest) -> ScoreVector:
        return validate_scores(req, self._score(req))

    def complete(self, prompt: str, stop: Optional[str] = None) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        return truncate_at_stop(self._complete(prompt, stop), stop)

    def _score(self, req: ScoreRequest) -> Sequence[float]:
        raise NotImplementedError

    def _complete(self, prompt: str, stop: Optional[str]) -> str:
        raise NotImplementedError


# -- prompt layout ----------------------------------------------------------

@dataclass(frozen=True)
class PromptParts:
    purpose: str
    rules: str
    considerations: str
    examples: tuple
    instruction: str
    history: tuple = ()

    def with_history(self, history) -> "PromptParts":
        return PromptParts(self.purpose, self.rules, self.considerations, tuple(self.examples), self.instruction, tuple(history))


def assemble_prompt(parts: PromptParts) -> str:
    """Join the prompt sections with blank lines; decoded skills follow the instruction line."""
    sections = [parts.purpose, parts.rules, parts.considerations, *parts.examples]
    head = "\n\n".join(s.strip("\n") for s in sections if s)
    lines = [INSTRUCTION_PREFIX + parts.instruction.strip()]
    lines.extend(format_skill(s) if not isinstance(s, str) else s for s in parts.history)
    tail = "\n".join(lines)
    return f"{head}\n\n{tail}" if head else tail


def instruction_line(prompt: str) -> tuple:
    """Return ``(instruction, index of that line)`` for the last instruction line in ``prompt``."""
    lines = prompt.split("\n")
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].startswith(INSTRUCTION_PREFIX):
            return lines[i][len(INSTRUCTION_PREFIX) :], i
    return None, -1


def decoded_history(prompt: str) -> list:
    inst, at = instruction_line(prompt)
    if at < 0:
        return []
    return [ln for ln in prompt.split("\n")[at + 1 :] if ln.strip()]


def retry_count(prompt: str) -> int:
    return sum(1 for ln in prompt.split("\n") if ln.startswith(RETRY_NOTE_PREFIX))


# -- mock backend -------------------------------------------------------------

@dataclass(frozen=True)
class MockPolicy:
    """Scripted preferences: ``(instruction, step) -> preferred candidate``."""

    script: Mapping = field(default_factory=dict)
    default_score: float = -5.0
    preferred_score: float = -0.1

    def __post_init__(self):
        if not self.preferred_score > self.default_score:
            raise ValueError("preferred score must exceed the default score")

    @classmethod
    def from_plans(cls, plans: Mapping, **kw) -> "MockPolicy":
        """Build a script from ``{instruction: [command, ...]}``."""
        script = {}
        for inst, commands in plans.items():
            for step, cmd in enumerate(commands):
                script[(inst, step)] = cmd
        return cls(script, **kw)

    def preferred(self, instruction, step) -> Optional[str]:
        return self.script.get((instruction, step))


class MockScorer(Scorer):
    """Deterministic scripted stand-in for a language model."""

    def __init__(self, policy: Optional[MockPolicy] = None, completions: Optional[Mapping] = None):
        self.policy = policy or MockPolicy()
        # instruction -> completion text, or a list indexed by retry attempt
        self.completions = dict(completions or {})

    def _score(self, req):
        inst, _ = instruction_line(req.prompt)
        step = len(decoded_history(req.prompt))
        want = self.policy.preferred(inst, step)
        p = self.policy
        return [p.preferred_score if c == want else p.default_score for c in req.candidates]

    def _complete(self, prompt, stop):
        inst, _ = instruction_line(prompt)
        if inst is None or inst not in self.completions:
            raise NoScriptedCompletion(f"no scripted completion for instruction {inst!r}")
        text = self.completions[inst]
        if isinstance(text, (list, tuple)):
            text = text[min(retry_count(prompt), len(text) - 1)]
        return text


class CountingScorer(Scorer):
    """Wraps a backend and advances a virtual clock on every call.

    Gives the mock backend a deterministic process time that scales with
    the number of model calls, which is what dominates real runs.
    """

    def __init__(self, inner: Scorer, latency_ms: float = 10.0):
        self.inner = inner
        self.latency_ms = latency_ms
        self.calls = 0

    def now_ms(self) -> float:
        return self.calls * self.latency_ms

    def score(self, req):
        self.calls += 1
        return self.inner.score(req)

    def complete(self, prompt, stop=None):
        self.calls += 1
        return self.inner.complete(prompt, stop)
