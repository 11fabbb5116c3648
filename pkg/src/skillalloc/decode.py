"""Greedy likelihood decoding of a skill list from an instruction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import DecodeOverflow
from .scoring import PromptParts, ScoreRequest, Scorer, assemble_prompt
from .skills import SkillSet, format_skill

DEFAULT_MAX_LEN = 20


@dataclass(frozen=True)
class SkillList:
    items: tuple
    source_instruction: str

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def commands(self) -> list:
        return [format_skill(s) for s in self.items]


def build_skill_list(
    instruction: str,
    skill_set: SkillSet,
    scorer: Scorer,
    max_len: int = DEFAULT_MAX_LEN,
    parts: Optional[PromptParts] = None,
) -> SkillList:
    """Pick the most likely next skill until ``done()`` wins.

    Only members of ``skill_set`` are ever scored, so a backend cannot
    introduce a skill outside the vocabulary. ``stay()`` is not a plan
    step and is never offered. Raises :class:`DecodeOverflow` if ``done()``
    has not won after ``max_len`` skills.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    candidates = skill_set.decode_candidates()
    if not any(c.is_done for c in candidates):
        raise ValueError("skill set has no done() instance")
    texts = tuple(format_skill(c) for c in candidates)
    parts = parts or PromptParts("", "", "", (), instruction)

    history = []
    while True:
        req = ScoreRequest(assemble_prompt(parts.with_history(history)), texts)
        choice = candidates[scorer.score(req).argmax()]
        if choice.is_done:
            return SkillList(tuple(history), instruction)
        if len(history) == max_len:
            raise DecodeOverflow(
                f"no done() after {max_len} skills for instruction {instruction!r}"
            )
        history.append(choice)
