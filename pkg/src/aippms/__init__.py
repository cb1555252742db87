"""Budget-constrained adaptive informative path planning with multimodal sensing.

An agent on a weighted location graph must gather utility by visiting nodes
and may spend energy on noisy sensors to decide where to go, all while
guaranteeing it can still reach its goal within an energy budget. The package
provides the POMDP model, an exact factored belief, a constrained Monte Carlo
tree-search planner with a cost-benefit rollout, a replanning baseline, two
benchmark domains, and a reproducible experiment runner.
"""

from .belief import (
    Observation,
    WorldBelief,
    bayes_update,
    collapse_on_visit,
    expected_marginal_utility,
    info_gain_estimate,
    sample_world,
)
from .errors import (
    AippmsError,
    GenerationError,
    GraphError,
    InconsistentObservationError,
    InfeasibleInstanceError,
    InvalidActionError,
    TerminalStateError,
)
from .graph import (
    Action,
    AgentState,
    CostMatrix,
    LocationGraph,
    Move,
    Sense,
    SensorSpec,
    action_cost,
    all_pairs_shortest_costs,
    feasible_actions,
    is_feasible_state,
    tsp_cost_estimate,
)
from .naive import (
    NaiveConfig,
    PlannedPath,
    best_sensor_ig,
    naive_action,
    path_expected_utility,
    plan_orienteering_path,
)
from .pomcp import (
    PlannerConfig,
    SearchTree,
    gcb_rollout_action,
    plan,
    random_rollout_action,
    rollout,
    simulate,
    ucb_select,
)
from .pomdp import (
    Problem,
    StepOutcome,
    UtilityFn,
    episode_return,
    initial_outcome,
    is_terminal,
    step,
)
from .sensing import DistanceDecaySensorModel

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AgentState",
    "AippmsError",
    "CostMatrix",
    "DistanceDecaySensorModel",
    "GenerationError",
    "GraphError",
    "InconsistentObservationError",
    "InfeasibleInstanceError",
    "InvalidActionError",
    "LocationGraph",
    "Move",
    "NaiveConfig",
    "Observation",
    "PlannedPath",
    "PlannerConfig",
    "Problem",
    "SearchTree",
    "Sense",
    "SensorSpec",
    "StepOutcome",
    "TerminalStateError",
    "UtilityFn",
    "WorldBelief",
    "action_cost",
    "all_pairs_shortest_costs",
    "bayes_update",
    "best_sensor_ig",
    "collapse_on_visit",
    "episode_return",
    "expected_marginal_utility",
    "feasible_actions",
    "gcb_rollout_action",
    "info_gain_estimate",
    "initial_outcome",
    "is_feasible_state",
    "is_terminal",
    "naive_action",
    "path_expected_utility",
    "plan",
    "plan_orienteering_path",
    "random_rollout_action",
    "rollout",
    "sample_world",
    "simulate",
    "step",
    "tsp_cost_estimate",
    "ucb_select",
]
