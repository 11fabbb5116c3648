"""Command-line entry point: ``skillalloc {plan,run,eval}``.

Exit codes::

    0  success
    2  invalid config, scenario or arguments
    3  decoding never produced done()
    4  dependency graph still cyclic after all attempts
    5  scoring backend unavailable or misbehaving
    6  deadlock: no robot can execute any remaining root skill
    7  no traces to evaluate
    8  a skill kept failing past the retry cap
    9  every skill ran but the goal does not hold
    10 generated dependency text names invalid nodes

``run`` writes every trace it can and then exits with the code of the
first failed scenario, in corpus order.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import errors
from .allocation import DEFAULT_ALPHA
from .decode import DEFAULT_MAX_LEN, build_skill_list
from .depgraph import DEFAULT_MAX_ATTEMPTS, generate_dependencies, render_edges, to_dot
from .episode import EpisodeParams
from .errors import ConfigInvalid, EmptyTrials, PlanningError
from .metrics import report_json, report_text, summarize
from .prompts import dependency_prompt, skill_prompt_parts
from .scenarios import MOCK_LATENCY_MS, load_corpus, load_scenario_env, run_scenario
from .scoring import CountingScorer, MockPolicy, MockScorer
from .skills import enumerate_skill_set

log = logging.getLogger("skillalloc")

TOKEN_ENV = "OPENAI_API_KEY"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def exit_code_for(reason) -> int:
    cls = getattr(errors, reason or "", None)
    if isinstance(cls, type) and issubclass(cls, PlanningError):
        return cls.exit_code
    return 1


# -- scorers --------------------------------------------------------------

def _http_scorer(args):
    if not args.endpoint or not args.model:
        raise ConfigInvalid("--scorer http needs --endpoint and --model")
    from .http_backend import HttpScorer

    return HttpScorer(args.endpoint, args.model, timeout=args.timeout, token_env=TOKEN_ENV, seed=args.seed)


def _load_mock_script(path):
    """``{"instruction", "skills": [...], "edges": str | [str, ...]}``"""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read mock script {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno) from exc
    for key in ("instruction", "skills"):
        if key not in data:
            raise ConfigInvalid("missing mock script field", field=key)
    return data


# -- plan -----------------------------------------------------------------

def _plan_target(args):
    """Returns (instruction, env, mock scorer or None)."""
    if args.scenario:
        corpus = load_corpus(args.scenario)
        picked = _select(corpus, args.id)[0]
        env = load_scenario_env(picked, args.env, args.condition)
        return picked.instruction, env, picked.mock_scorer()
    if not args.env:
        raise ConfigInvalid("plan needs --env (or --scenario)")
    from .world import load_environment

    env = load_environment(args.env, args.condition)
    mock = None
    instruction = args.instruction
    if args.mock_script:
        script = _load_mock_script(args.mock_script)
        instruction = instruction or script["instruction"]
        mock = MockScorer(
            MockPolicy.from_plans({script["instruction"]: script["skills"]}),
            {script["instruction"]: script.get("edges", "")},
        )
    if not instruction:
        raise ConfigInvalid("plan needs --instruction, --mock-script or --scenario")
    return instruction, env, mock


def cmd_plan(args) -> int:
    instruction, env, mock = _plan_target(args)
    if args.scorer == "http":
        scorer = _http_scorer(args)
    elif mock is None:
        raise ConfigInvalid("--scorer mock needs --mock-script or --scenario")
    else:
        scorer = mock
    skill_set = enumerate_skill_set(env.world, env.templates)
    skills = build_skill_list(
        instruction, skill_set, scorer, args.max_len, skill_prompt_parts(env, instruction, env.world)
    )
    for i, cmd in enumerate(skills.commands()):
        print(f"{i}: {cmd}")
    if not skills.items:
        print("(empty plan)")
        return 0
    n_robots = len(env.world.robots)
    graph = generate_dependencies(
        instruction,
        skills.items,
        scorer,
        args.max_graph_attempts,
        prompt_for=lambda notes: dependency_prompt(instruction, skills.items, notes, n_robots=n_robots),
    )
    print("edges:")
    print(render_edges(graph.edges) or "(none)")
    out = Path(args.out or "plan.dot")
    write_atomic(out, to_dot(graph))
    print(f"wrote {out}")
    return 0


# -- run ------------------------------------------------------------------

def _select(corpus, ids):
    if not ids:
        return corpus
    wanted = set(ids)
    missing = wanted - {s.id for s in corpus}
    if missing:
        raise ConfigInvalid(f"unknown scenario ids: {', '.join(sorted(missing))}", field="--id")
    return [s for s in corpus if s.id in wanted]


def _run_one(scenario, args, params):
    env = load_scenario_env(scenario, args.env, args.condition)
    if args.scorer == "http":
        doc = run_scenario(scenario, env, params, scorer=_http_scorer(args))
    else:
        counting = CountingScorer(scenario.mock_scorer(), MOCK_LATENCY_MS)
        doc = run_scenario(scenario, env, params, scorer=counting, clock=counting.now_ms)
    text = json.dumps(doc, indent=2) + "\n"
    write_atomic(Path(args.out) / f"{scenario.id}.json", text)
    return doc


def cmd_run(args) -> int:
    if not args.scenario:
        raise ConfigInvalid("run needs --scenario")
    corpus = _select(load_corpus(args.scenario), args.id)
    params = EpisodeParams(alpha=args.alpha, max_len=args.max_len, max_graph_attempts=args.max_graph_attempts)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            docs = list(pool.map(lambda s: _run_one(s, args, params), corpus))
    else:
        docs = [_run_one(s, args, params) for s in corpus]
    code = 0
    for doc in docs:
        status = doc["outcome"]
        if doc["failure_reason"]:
            status += f" ({doc['failure_reason']}: {doc['failure_detail']})"
        print(f"{doc['scenario']}: {status}, {doc['step_count']} rounds (min {doc['min_steps']})")
        if code == 0 and doc["outcome"] != "success":
            code = exit_code_for(doc["failure_reason"])
    return code


# -- eval -----------------------------------------------------------------

def load_traces(directory) -> list:
    """Every ``*.json`` below ``directory`` that looks like a trace, in path order."""
    root = Path(directory)
    if not root.is_dir():
        raise ConfigInvalid(f"trace directory {root} does not exist")
    traces = []
    for path in sorted(root.rglob("*.json")):
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno) from exc
        if isinstance(doc, dict) and "step_count" in doc and "outcome" in doc:
            traces.append(doc)
    return traces


def cmd_eval(args) -> int:
    traces = load_traces(args.traces)
    if not traces:
        raise EmptyTrials(f"no traces found under {args.traces}")
    report = summarize(traces, key=args.group_by)
    out = Path(args.out) if args.out else Path(args.traces) / "report.json"
    write_atomic(out, report_json(report))
    sys.stdout.write(report_text(report))
    return 0


# -- argument parsing -----------------------------------------------------

def _scorer_flags(p):
    p.add_argument("--scorer", choices=("mock", "http"), default="mock")
    p.add_argument("--endpoint", help="completions endpoint URL (http scorer)")
    p.add_argument("--model", help="model name sent to the endpoint (http scorer)")
    p.add_argument("--timeout", type=float, default=30.0, help="HTTP timeout in seconds")
    p.add_argument("--seed", type=int, default=None, help="forwarded to the http backend; the mock ignores it")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.add_argument("--max-graph-attempts", type=int, default=DEFAULT_MAX_ATTEMPTS)
    p.add_argument("--condition", choices=("1", "2", "3"), default=None, help="grasp constraint condition")
    p.add_argument("--env", help="environment config file, or A/B/C for a bundled one")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skillalloc", description="Multi-robot skill planning and allocation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="decode a skill list and dependency graph, write DOT")
    _scorer_flags(plan)
    plan.add_argument("--instruction")
    plan.add_argument("--mock-script", help="JSON file with instruction, skills and edges")
    plan.add_argument("--scenario", help="scenario file, or A/B/C for a bundled corpus")
    plan.add_argument("--id", action="append", help="scenario id (default: first in the file)")
    plan.add_argument("--out", help="DOT output path (default plan.dot)")
    plan.set_defaults(func=cmd_plan)

    run = sub.add_parser("run", help="plan and simulate scenarios, write one trace each")
    _scorer_flags(run)
    run.add_argument("--scenario", help="scenario file, or A/B/C for a bundled corpus")
    run.add_argument("--id", action="append", help="only run these scenario ids (repeatable)")
    run.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    run.add_argument("--out", default="traces", help="trace output directory")
    run.add_argument("--jobs", type=int, default=1)
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="summarize a directory of traces")
    ev.add_argument("traces", help="directory searched recursively for trace JSON files")
    ev.add_argument("--out", help="report path (default <traces>/report.json)")
    ev.add_argument("--group-by", default="label", help="trace field to group rows by")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except PlanningError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return ConfigInvalid.exit_code


if __name__ == "__main__":
    sys.exit(main())
