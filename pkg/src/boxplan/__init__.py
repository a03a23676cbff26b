"""Verifiable multi-robot grid planning: environments, planner, rewards."""

from .env import (
    Action,
    EnvConfig,
    EnvState,
    ObjectSpec,
    RobotSpec,
    Step,
    Violation,
    ViolationKind,
    apply_step,
    config_from_dict,
    config_to_dict,
    init_state,
    is_goal,
    render_observation,
    validate_step,
)
from .geometry import Point, Segment, in_reach_band, points_equal, segments_intersect
from .plans import (
    MODE_FULLPLAN,
    MODE_REPLAN,
    Plan,
    parse_response,
    plan_from_jsonable,
    plan_to_jsonable,
    serialize_plan,
    serialize_step,
)
from .astar import SolveResult, SolveStatus, solve
from .reward import (
    GroupAdvantages,
    ScoreBreakdown,
    golden_length,
    group_advantages,
    score_fullplan,
    score_replan_episode,
)
from .datagen import (
    DatasetRecord,
    gen_newcoord,
    gen_randrob,
    gen_standard,
    load_dataset,
    summarize,
)
from .evalharness import Attempt, EvalReport, evaluate

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Attempt",
    "DatasetRecord",
    "EnvConfig",
    "EnvState",
    "EvalReport",
    "GroupAdvantages",
    "MODE_FULLPLAN",
    "MODE_REPLAN",
    "ObjectSpec",
    "Plan",
    "Point",
    "RobotSpec",
    "ScoreBreakdown",
    "Segment",
    "SolveResult",
    "SolveStatus",
    "Step",
    "Violation",
    "ViolationKind",
    "apply_step",
    "config_from_dict",
    "config_to_dict",
    "evaluate",
    "gen_newcoord",
    "gen_randrob",
    "gen_standard",
    "golden_length",
    "group_advantages",
    "in_reach_band",
    "init_state",
    "is_goal",
    "load_dataset",
    "parse_response",
    "plan_from_jsonable",
    "plan_to_jsonable",
    "points_equal",
    "render_observation",
    "score_fullplan",
    "score_replan_episode",
    "segments_intersect",
    "serialize_plan",
    "serialize_step",
    "solve",
    "summarize",
    "validate_step",
]
