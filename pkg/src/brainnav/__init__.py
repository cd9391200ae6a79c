"""Bio-inspired dual-map grid navigation: simulator, policies, benchmark harness."""

from . import _kernels
from .actions import BACKWARD, FORWARD, MacroAction, STOP, TURN_LEFT, TURN_RIGHT, backtrack_to
from .decision import ActionPlan, DecisionInput, GoalTarget, build_prompt, decide_oracle, parse_response
from .episode import EpisodeLimits, ReplayError, UnsupportedInstruction, replay, run_episode
from .executor import MotionCommand, delta_to_heading, execute_backtrack, heading_after, to_motion
from .memory import ActionHistory, ExperienceKey, StepRecord, TrajectoryStore, plan_backtrack
from .metrics import (
    EpisodeResult,
    MetricsReport,
    build_report,
    compute_backtracking_metrics,
    compute_core_metrics,
    compute_spl,
    emit_report,
)
from .perception import PerceptorConfig, SemanticObservation, perceive, perceive_remote
from .scenario import GoalSpec, Instruction, Scenario, ScenarioError, load_scenario, loads_scenario
from .spatial import CandidatePoint, CoordinateMap, TopoGraph, gen_candidates
from .world import AgentPose, GridWorld, SimObject, StepOutcome, apply_macro, goal_distance_m, visible_objects

__version__ = "0.1.0"

KERNEL_BACKEND = _kernels.BACKEND
