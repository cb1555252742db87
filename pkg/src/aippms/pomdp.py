"""The constrained-POMDP generative model.

A :class:`Problem` bundles one benchmark instance: graph, sensor suite,
utility function, prior belief, and energy budget. Transitions are
deterministic; only observations are stochastic. Rewards are the utility
function's discrete derivatives, so summed step rewards telescope to the
utility of the final visited set. Budget violation is structurally impossible
for pruned policies and is treated as an error, never as a numeric penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .belief import Observation, WorldBelief, WorldState, collapse_on_visit
from .errors import InfeasibleInstanceError, InvalidActionError
from .graph import (
    Action,
    AgentState,
    CostMatrix,
    LocationGraph,
    Move,
    Sense,
    SensorSpec,
    action_cost as _action_cost,
    all_pairs_shortest_costs,
    feasible_actions,
)


class UtilityCursor:
    """Incremental evaluator of one utility function around a growing set.

    A cursor freezes the states of everything outside the candidate node, so
    ``marginal(node, state)`` answers "what would visiting ``node`` in
    ``state`` add right now" and ``add`` absorbs an actual visit. Planners
    keep one cursor per simulated trajectory instead of recomputing set unions
    from scratch. This generic version re-evaluates the full set function;
    domain utilities override it with O(marginal) implementations.
    """

    def __init__(self, utility: "UtilityFn", visited, world: WorldState):
        self._utility = utility
        self._visited = set(visited)
        self._world = np.array(world)
        self._value = utility.value(self._visited, self._world)

    def marginal(self, node: int, state: int) -> float:
        if node in self._visited:
            return 0.0
        prev, self._world[node] = self._world[node], state
        gain = (
            self._utility.value(self._visited | {node}, self._world) - self._value
        )
        self._world[node] = prev
        return gain

    def marginal_row(self, node: int) -> np.ndarray:
        """Marginal gain of visiting ``node`` for each possible state."""
        k = self._utility.n_states
        return np.array([self.marginal(node, x) for x in range(k)])

    def eu_for(self, node: int, belief_row: np.ndarray) -> float:
        """Expected marginal gain of visiting ``node`` under its belief row."""
        return float(
            sum(
                p * self.marginal(node, x)
                for x, p in enumerate(belief_row)
                if p > 0.0
            )
        )

    def add(self, node: int, state: int) -> float:
        """Record a visit of ``node`` in ``state``; returns its marginal gain."""
        gain = self.marginal(node, state)
        self._world[node] = state
        self._visited.add(node)
        self._value += gain
        return gain

    def clone(self) -> "UtilityCursor":
        dup = object.__new__(UtilityCursor)
        dup._utility = self._utility
        dup._visited = set(self._visited)
        dup._world = np.array(self._world)
        dup._value = self._value
        return dup


class UtilityFn:
    """Monotone set function over visited nodes, given a world.

    Subclasses implement :meth:`value` or provide a specialized cursor;
    ``value(set(), world) == 0`` and adding nodes never decreases the value.
    """

    #: Size of the state alphabet the utility understands.
    n_states: int = 0

    def value(self, visited, world: WorldState) -> float:
        raise NotImplementedError

    def marginal_gain(self, node: int, visited, world: WorldState) -> float:
        """Discrete derivative: value(visited + node) - value(visited)."""
        return self.cursor(visited, world).marginal(node, int(world[node]))

    def cursor(self, visited, world: WorldState) -> UtilityCursor:
        return UtilityCursor(self, visited, world)


@runtime_checkable
class SensorModel(Protocol):
    """Domain-provided stochastic observation model for sensing actions."""

    def observe(
        self,
        world: WorldState,
        state: AgentState,
        sensor: str,
        rng: np.random.Generator,
    ) -> Observation: ...

    def likelihood_fn(self, state: AgentState, sensor: str): ...


@dataclass(frozen=True, eq=False)
class Problem:
    """One benchmark instance.

    ``sense_sites`` restricts where sensing is allowed (None = anywhere).
    ``post_visit_states`` optionally overrides what a node's belief collapses
    to when visited: entry -1 means the observed true state, anything else is
    a fixed state index (used to mark harvested nodes as worthless).
    """

    graph: LocationGraph
    sensors: tuple[SensorSpec, ...]
    utility: UtilityFn
    prior: WorldBelief
    budget: float
    domain: str
    sensor_model: SensorModel
    sense_sites: frozenset[int] | None = None
    post_visit_states: np.ndarray | None = None
    params: dict = field(default_factory=dict, repr=False)
    costs: CostMatrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.sensors:
            raise ValueError("sensor suite must be non-empty")
        ids = [s.id for s in self.sensors]
        if len(ids) != len(set(ids)):
            raise ValueError("sensor ids must be unique")
        if self.prior.n_nodes != self.graph.n_nodes:
            raise ValueError("prior must cover every graph node")
        object.__setattr__(self, "costs", all_pairs_shortest_costs(self.graph))
        ret = self.costs.cost(self.graph.start, self.graph.goal)
        if self.budget < ret:
            raise InfeasibleInstanceError(
                f"budget {self.budget} is below the start-to-goal cost {ret}"
            )

    def sensor_spec(self, sensor: str) -> SensorSpec:
        for spec in self.sensors:
            if spec.id == sensor:
                return spec
        raise InvalidActionError(f"unknown sensor {sensor!r}")

    def feasible_actions(self, state: AgentState) -> set[Action]:
        return feasible_actions(
            state, self.graph, self.sensors, self.costs, self.sense_sites
        )

    def action_cost(self, state: AgentState, action: Action) -> float:
        return _action_cost(state, action, self.graph, self.sensors)

    def post_visit_state(self, node: int, true_state: int) -> int:
        """State index the belief collapses to when ``node`` is visited."""
        if self.post_visit_states is None:
            return true_state
        override = int(self.post_visit_states[node])
        return true_state if override < 0 else override

    def initial_state(self) -> AgentState:
        return AgentState(
            current=self.graph.start,
            visited=frozenset({self.graph.start}),
            remaining_budget=self.budget,
        )

    def initial_belief(self, world: WorldState) -> WorldBelief:
        """Prior with the start node collapsed by its visit observation."""
        start = self.graph.start
        return collapse_on_visit(
            self.prior, start, self.post_visit_state(start, int(world[start]))
        )


@dataclass(frozen=True)
class StepOutcome:
    """Result bundle of one generative-model step."""

    next_state: AgentState
    observation: Observation
    reward: float
    cost: float


def step(
    problem: Problem,
    state: AgentState,
    world: WorldState,
    action: Action,
    rng: np.random.Generator,
) -> StepOutcome:
    """Apply one action to the (deterministic) transition model.

    Moves reveal the target's true state and pay out the utility's marginal
    gain; sensing draws a noisy observation from the domain model and pays
    nothing. Raises :class:`InvalidActionError` for infeasible actions — a
    pruning-respecting policy can never trigger it.
    """
    to_goal = problem.costs.costs[:, problem.graph.goal]
    if isinstance(action, Move):
        targets = problem.graph.neighbors(state.current)
        if action.target == state.current or action.target not in targets:
            raise InvalidActionError(
                f"move from {state.current} to non-neighbor {action.target}"
            )
        cost = problem.graph.edge_weight(state.current, action.target)
        next_budget = state.remaining_budget - cost
        if next_budget < to_goal[action.target]:
            raise InvalidActionError(
                f"move to {action.target} strands the agent short of the goal"
            )
        reward = (
            0.0
            if action.target in state.visited
            else problem.utility.marginal_gain(action.target, state.visited, world)
        )
        next_state = AgentState(
            current=action.target,
            visited=state.visited | {action.target},
            remaining_budget=next_budget,
        )
        obs = Observation(
            readings=((action.target, int(world[action.target])),), action=action
        )
        return StepOutcome(next_state, obs, reward, cost)

    if problem.sense_sites is not None and state.current not in problem.sense_sites:
        raise InvalidActionError(
            f"sensing is not allowed at node {state.current}"
        )
    spec = problem.sensor_spec(action.sensor)
    next_budget = state.remaining_budget - spec.cost
    if next_budget < to_goal[state.current]:
        raise InvalidActionError(
            f"sensing with {action.sensor!r} strands the agent short of the goal"
        )
    obs = problem.sensor_model.observe(world, state, action.sensor, rng)
    next_state = AgentState(
        current=state.current,
        visited=state.visited,
        remaining_budget=next_budget,
    )
    return StepOutcome(next_state, obs, 0.0, spec.cost)


def initial_outcome(problem: Problem, world: WorldState) -> StepOutcome:
    """Synthetic zero-cost reveal of the start node at episode setup.

    Recording the start visit as a trajectory entry makes episode rewards
    telescope exactly from the empty set to the final visited set.
    """
    start = problem.graph.start
    reward = problem.utility.marginal_gain(start, frozenset(), world)
    obs = Observation(readings=((start, int(world[start])),), action=None)
    return StepOutcome(problem.initial_state(), obs, float(reward), 0.0)


def is_terminal(problem: Problem, state: AgentState) -> bool:
    """True once no action can be taken without stranding the agent."""
    return not problem.feasible_actions(state)


def episode_return(
    problem: Problem, trajectory: list[StepOutcome]
) -> tuple[float, float, bool]:
    """Total reward, total energy cost, and goal-arrival flag of a trajectory."""
    total_reward = sum(o.reward for o in trajectory)
    total_cost = sum(o.cost for o in trajectory)
    final = trajectory[-1].next_state.current if trajectory else problem.graph.start
    return float(total_reward), float(total_cost), final == problem.graph.goal
