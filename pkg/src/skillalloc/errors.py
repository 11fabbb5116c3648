"""Exception types raised across the planner.

Every planning failure carries the CLI exit code it maps to, so the
command layer never has to keep a separate lookup table in sync.
"""


class PlanningError(Exception):
    """Base class for all typed planner failures."""

    exit_code = 1


class ConfigInvalid(PlanningError):
    exit_code = 2

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class EmptyDomain(ConfigInvalid):
    pass


class MalformedSkill(PlanningError):
    exit_code = 2


class UnknownSkillName(MalformedSkill):
    pass


class DecodeOverflow(PlanningError):
    exit_code = 3


class CyclicAfterRetries(PlanningError):
    exit_code = 4

    def __init__(self, attempts, cycle):
        self.attempts = attempts
        self.cycle = cycle
        super().__init__(
            f"dependency graph still cyclic after {attempts} attempts: "
            + " -> ".join(map(str, list(cycle) + [cycle[0]]))
        )


class BackendUnavailable(PlanningError):
    exit_code = 5


class ScoringMismatch(PlanningError):
    exit_code = 5


class NoScriptedCompletion(PlanningError):
    exit_code = 5


class Deadlock(PlanningError):
    exit_code = 6


class EmptyTrials(PlanningError):
    exit_code = 7


class RetryExhausted(PlanningError):
    exit_code = 8


class GoalNotMet(PlanningError):
    exit_code = 9


class EdgeTextError(PlanningError):
    """Generated edge text references nodes that cannot form a valid graph."""

    exit_code = 10

    def __init__(self, message, attempt=None):
        self.attempt = attempt
        if attempt is not None:
            message = f"{message} (graph attempt {attempt})"
        super().__init__(message)


class EdgeOutOfRange(EdgeTextError):
    pass


class SelfEdge(EdgeTextError):
    pass


class UnknownNode(PlanningError, KeyError):
    exit_code = 2

    def __str__(self):
        return Exception.__str__(self)


class UnknownRobot(UnknownNode):
    pass


class NegativeDistance(PlanningError, ValueError):
    exit_code = 2


class OutOfRange(PlanningError, ValueError):
    exit_code = 2
