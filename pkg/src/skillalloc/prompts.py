"""Default prompt text for skill decoding and dependency generation.

Environment configs may override any section under their ``prompt`` key:
``purpose``, ``considerations``, ``examples`` (skill decoding) and
``dependency_examples``.
"""

from __future__ import annotations

from .scoring import RETRY_NOTE_PREFIX, PromptParts, assemble_prompt
from .skills import format_skill

EDGE_HEADER = "Edges:"
EDGE_STOP = "\nEND"

DEFAULT_PURPOSE = (
    "There are {n_robots} robots in this environment ({robot_summary}). "
    "Given an instruction, choose the robot skills needed to carry it out, one per line, "
    "and finish with done()."
)

DEFAULT_CONSIDERATIONS = [
    "A block must be the top of its stack before it can be moved.",
    "Stacking 'red, yellow' means yellow goes on top of red.",
    "Objects in another room must be carried by a mobile robot before an arm can use them.",
]

DEFAULT_EXAMPLES = [
    "Instruction: Put the red block on the middle.\npick_and_place(red block, middle)\ndone()",
    "Instruction: Stack the blocks in the order of blue, green on the upper left corner.\n"
    "pick_and_place(blue block, upper left corner)\npick_and_place(green block, blue block)\ndone()",
    "Instruction: Put the yellow block and the green block on different corners.\n"
    "pick_and_place(yellow block, upper right corner)\npick_and_place(green block, lower left corner)\ndone()",
    "Instruction: Put the green bowl on the middle, then put the red block in it.\n"
    "pick_and_place(green bowl, middle)\npick_and_place(red block, green bowl)\ndone()",
    "Instruction: Put the blue block on the lower edge and stack the red block on it.\n"
    "pick_and_place(blue block, lower edge)\npick_and_place(red block, blue block)\ndone()",
]

DEPENDENCY_PURPOSE = (
    "The numbered skills below will be executed by {n_robots} robots in parallel where possible. "
    "Decide which skills must finish before others can start."
)

DEPENDENCY_RULES = (
    "Rules:\n"
    "- Skill j depends on skill i when j cannot be executed unless i has been completed.\n"
    "- Think step by step first. Then write the line 'Edges:' followed by one line 'i -> j' "
    "per dependency using the skill numbers, and finish with END.\n"
    "- The dependencies must not form a cycle."
)

DEPENDENCY_EXAMPLES = [
    "Instruction: Stack red, yellow on the middle.\n0: pick_and_place(red block, middle)\n"
    "1: pick_and_place(yellow block, red block)\nYellow goes on red, so red must be placed first.\nEdges:\n0 -> 1\nEND",
    "Instruction: Put red and blue on different corners.\n0: pick_and_place(red block, upper left corner)\n"
    "1: pick_and_place(blue block, lower right corner)\nThe two placements are independent.\nEdges:\nEND",
    "Instruction: Put the red bowl on the middle, then the green block in it.\n0: pick_and_place(red bowl, middle)\n"
    "1: pick_and_place(green block, red bowl)\nThe bowl must be in place before the block goes in.\nEdges:\n0 -> 1\nEND",
    "Instruction: Stack blue, green, red on the upper right corner.\n0: pick_and_place(blue block, upper right corner)\n"
    "1: pick_and_place(green block, blue block)\n2: pick_and_place(red block, green block)\n"
    "Each block goes on the previous one.\nEdges:\n0 -> 1\n1 -> 2\nEND",
    "Instruction: Bring the blue block from the shelf to the middle.\n0: pick_up(blue block)\n1: put_down(middle)\n"
    "The block has to be picked up before it can be put down.\nEdges:\n0 -> 1\nEND",
]


def _robot_summary(world) -> str:
    parts = []
    for rid in sorted(world.robots):
        r = world.robots[rid]
        colors = "any color" if r.graspable is None else ", ".join(sorted(r.graspable))
        parts.append(f"{rid}: {r.kind} in the {world.robot_room[rid]}, grasps {colors}")
    return "; ".join(parts)


def skill_prompt_parts(env, instruction: str, world=None) -> PromptParts:
    world = world or env.world
    cfg = env.prompt
    purpose = cfg.get("purpose", DEFAULT_PURPOSE).format(n_robots=len(world.robots), robot_summary=_robot_summary(world))
    rules = ["Rules:"]
    for t in env.templates:
        desc = f": {t.description}" if t.description else ""
        rules.append(f"- {t.signature()}{desc}")
    rules.append("- done(): the instruction is complete.")
    considerations = "Considerations:\n" + "\n".join(f"- {c}" for c in cfg.get("considerations", DEFAULT_CONSIDERATIONS))
    examples = tuple(cfg.get("examples", DEFAULT_EXAMPLES))
    return PromptParts(purpose, "\n".join(rules), considerations, examples, instruction)


def dependency_prompt(instruction: str, skills, notes=(), n_robots: int = 2, examples=None) -> str:
    parts = PromptParts(
        DEPENDENCY_PURPOSE.format(n_robots=n_robots),
        DEPENDENCY_RULES,
        "",
        tuple(DEPENDENCY_EXAMPLES if examples is None else examples),
        instruction,
    )
    lines = [assemble_prompt(parts)]
    lines.extend(f"{i}: {format_skill(s)}" for i, s in enumerate(skills))
    lines.extend(RETRY_NOTE_PREFIX + n for n in notes)
    return "\n".join(lines)

