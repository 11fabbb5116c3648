"""Success rate, success weighted by path length, and planning time over trials."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import EmptyTrials

ALL_LABEL = "ALL"


@dataclass(frozen=True)
class TrialResult:
    success: bool
    steps: int
    min_steps: int
    planning_time_ms: float = 0.0

    def __post_init__(self):
        if self.min_steps < 1:
            raise ValueError(f"min_steps must be >= 1, got {self.min_steps}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.success and self.steps < 1:
            raise ValueError("a successful trial takes at least one step")

    @classmethod
    def from_trace(cls, trace: dict) -> "TrialResult":
        return cls(
            success=trace["outcome"] == "success",
            steps=int(trace["step_count"]),
            min_steps=int(trace["min_steps"]),
            planning_time_ms=float(trace["planning_time_ms"]),
        )


def _nonempty(trials) -> list:
    trials = list(trials)
    if not trials:
        raise EmptyTrials("no trials to evaluate")
    return trials


def spl(trials: Sequence[TrialResult]) -> float:
    """Mean over trials of ``S * l / max(p, l)``."""
    trials = _nonempty(trials)
    terms = [t.min_steps / max(t.steps, t.min_steps) if t.success else 0.0 for t in trials]
    return math.fsum(terms) / len(trials)


def success_rate(trials: Sequence[TrialResult]) -> float:
    trials = _nonempty(trials)
    return sum(1 for t in trials if t.success) / len(trials)


def mean_planning_time(trials: Sequence[TrialResult]) -> Optional[float]:
    """Mean planning time of the successful trials; ``None`` if there are none."""
    times = [t.planning_time_ms for t in trials if t.success]
    if not times:
        return None
    return math.fsum(times) / len(times)


def _row(label: str, trials: list) -> dict:
    mean_t = mean_planning_time(trials)
    return {
        "label": label,
        "n": len(trials),
        "success_rate": success_rate(trials),
        "spl": spl(trials),
        "mean_planning_time_ms": None if mean_t is None else round(mean_t, 3),
    }


def summarize(traces: Iterable[dict], key: str = "label") -> dict:
    """Per-label rows (sorted by label) plus an overall row.

    Each trace needs ``outcome``, ``step_count``, ``min_steps``,
    ``planning_time_ms`` and the grouping field ``key``.
    """
    traces = _nonempty(traces)
    groups = {}
    for tr in traces:
        if key not in tr:
            raise ValueError(f"trace {tr.get('scenario', '?')!r} has no {key!r} field")
        groups.setdefault(str(tr[key]), []).append(TrialResult.from_trace(tr))
    rows = [_row(label, groups[label]) for label in sorted(groups)]
    everything = [t for label in sorted(groups) for t in groups[label]]
    return {"rows": rows, "overall": _row(ALL_LABEL, everything)}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def report_text(report: dict) -> str:
    """Aligned columns: label, n, success rate, SPL, mean planning time."""
    header = ["label", "n", "success_rate", "spl", "mean_time_ms"]
    fields = ["label", "n", "success_rate", "spl", "mean_planning_time_ms"]
    body = [[_fmt(r[f]) for f in fields] for r in report["rows"] + [report["overall"]]]
    widths = [max(len(header[i]), *(len(b[i]) for b in body)) for i in range(len(header))]

    def line(cells):
        first = cells[0].ljust(widths[0])
        return "  ".join([first] + [c.rjust(w) for c, w in zip(cells[1:], widths[1:])])

    out = [line(header), "  ".join("-" * w for w in widths)]
    out += [line(b) for b in body]
    return "\n".join(out) + "\n"
