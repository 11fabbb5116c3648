"""Multi-robot planning from language instructions.

A scorer picks skills one at a time from a closed vocabulary, a second
query orders them into a dependency graph, and each round the ready
skills are assigned to robots by an exact maximum-weight matching.
"""

from .allocation import Assignment, WeightMatrix, arm_weight, build_weight_matrix, solve_assignment
from .decode import SkillList, build_skill_list
from .depgraph import DependencyGraph, detect_cycle, generate_dependencies, parse_edge_text, root_nodes
from .episode import EpisodeParams, PlanTrace, run_episode
from .errors import PlanningError
from .kernels import BACKEND
from .metrics import TrialResult, spl, success_rate, summarize
from .scoring import MockPolicy, MockScorer, ScoreRequest, Scorer
from .skills import SkillInstance, SkillSet, enumerate_skill_set, format_skill, parse_skill
from .world import GoalSpec, WorldState, check_goal, execute_round, feasible, load_environment

__version__ = "0.1.0"
