"""Replanning baseline: nonadaptive path planning plus a move-or-sense rule.

Each step the baseline plans a budget-feasible path from the current node to
the goal with a greedy cost-benefit insertion heuristic on the shortest-path
metric closure (a stand-in for a full orienteering solver), scores the path by
the summed expected marginal utilities of its nodes, and compares that against
the best single sensing action's estimated information gain:

    move along the path   if  w * U(path) > (1 - w) * U(best sensor)
    fire the best sensor  otherwise

with ``path_weight`` w in [0, 1]. Unlike the tree search, the candidate paths
never interleave sensing, so the two action types are only ever weighed
against each other one step at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import WorldBelief, info_gain_estimate
from .errors import InvalidActionError, TerminalStateError
from .graph import Action, AgentState, Move, Sense, is_feasible_state
from .pomdp import Problem


@dataclass(frozen=True)
class NaiveConfig:
    """Baseline parameters.

    ``path_weight`` scales the path side of the move-or-sense comparison (1
    always follows the planned path, 0 senses whenever possible);
    ``max_insertions`` caps the orienteering insertion loop.
    """

    path_weight: float = 0.5
    ig_samples: int = 10
    max_insertions: int = 64

    def __post_init__(self) -> None:
        if not 0 <= self.path_weight <= 1:
            raise ValueError("path_weight must be in [0, 1]")
        if self.ig_samples < 1:
            raise ValueError("ig_samples must be positive")
        if self.max_insertions < 0:
            raise ValueError("max_insertions must be non-negative")


@dataclass(frozen=True)
class PlannedPath:
    """Concrete node walk from the current node to the goal.

    ``cost`` is the walk's total traversal cost, never above the remaining
    budget at planning time. Nodes may repeat where the walk passes through
    already-visited territory.
    """

    nodes: tuple[int, ...]
    cost: float


def plan_orienteering_path(
    problem: Problem,
    state: AgentState,
    belief: WorldBelief,
    max_insertions: int = 64,
) -> PlannedPath:
    """Budget-feasible path by greedy benefit-per-cost insertion.

    Starts from the cheapest current-to-goal path on the metric closure and
    repeatedly inserts the node with the best ratio of expected marginal
    utility to added metric cost, at its best insertion point, while the total
    stays within the remaining budget. The waypoint sequence is then expanded
    into concrete edges.
    """
    if not is_feasible_state(state, problem.costs, problem.graph.goal):
        raise InvalidActionError("cannot plan from an infeasible state")
    d = problem.costs.costs
    goal = problem.graph.goal
    budget = state.remaining_budget

    cursor = problem.utility.cursor(state.visited, belief.mode_world())
    gains = np.array(
        [
            0.0 if v in state.visited else cursor.eu_for(v, belief.probs[v])
            for v in range(problem.graph.n_nodes)
        ]
    )

    waypoints = [state.current, goal]
    cost = float(d[state.current, goal])
    candidates = {int(v) for v in np.flatnonzero(gains > 0.0)} - set(waypoints)

    for _ in range(max_insertions):
        best = None  # (neg ratio, node, position) lexicographic minimum
        for v in sorted(candidates):
            for i in range(len(waypoints) - 1):
                a, b = waypoints[i], waypoints[i + 1]
                added = float(d[a, v] + d[v, b] - d[a, b])
                if cost + added > budget:
                    continue
                ratio = np.inf if added <= 0.0 else gains[v] / added
                key = (-ratio, v, i)
                if best is None or key < best[0]:
                    best = (key, v, i, added)
        if best is None:
            break
        _, v, i, added = best
        waypoints.insert(i + 1, v)
        cost += added
        candidates.discard(v)

    nodes = [state.current]
    for a, b in zip(waypoints, waypoints[1:]):
        nodes.extend(problem.costs.shortest_path(a, b)[1:])
    return PlannedPath(nodes=tuple(nodes), cost=cost)


def path_expected_utility(
    path: PlannedPath, belief: WorldBelief, visited: frozenset[int], utility
) -> float:
    """Summed expected marginal utility of the path's unvisited nodes.

    Every marginal is taken against the fixed current visited set, an
    efficient stand-in for the path's true expected utility.
    """
    fresh = set(path.nodes) - set(visited)
    if not fresh:
        return 0.0
    cursor = utility.cursor(visited, belief.mode_world())
    return float(sum(cursor.eu_for(v, belief.probs[v]) for v in fresh))


def best_sensor_ig(
    problem: Problem,
    state: AgentState,
    belief: WorldBelief,
    ig_samples: int,
    rng: np.random.Generator,
) -> tuple[Action | None, float]:
    """Highest estimated information gain among feasible sensing actions.

    Returns ``(None, -inf)`` when no sensing action is feasible, signalling
    that the baseline must move.
    """
    sense_acts = [
        a for a in problem.feasible_actions(state) if isinstance(a, Sense)
    ]
    sense_acts.sort(key=lambda a: a.sensor)
    best_action, best_value = None, -np.inf
    for action in sense_acts:
        value = info_gain_estimate(
            belief, action, state, problem.sensor_model, ig_samples, rng
        )
        if value > best_value:
            best_action, best_value = action, value
    return best_action, float(best_value)


def naive_action(
    problem: Problem,
    state: AgentState,
    belief: WorldBelief,
    config: NaiveConfig,
    rng: np.random.Generator,
) -> Action:
    """One baseline decision: follow the replanned path or sense.

    The boundary case (both scaled utilities equal) senses. At the extremes
    the comparison is degenerate and resolves directly: weight 1 always takes
    the path move, weight 0 senses whenever a sensor is feasible.
    """
    feasible = problem.feasible_actions(state)
    if not feasible:
        raise TerminalStateError("no feasible action; episode is over")

    path = plan_orienteering_path(problem, state, belief, config.max_insertions)
    path_utility = path_expected_utility(
        path, belief, state.visited, problem.utility
    )
    sensor, sensor_gain = best_sensor_ig(
        problem, state, belief, config.ig_samples, rng
    )

    w = config.path_weight
    if sensor is None:
        move = True
    elif w == 1.0:
        move = True
    elif w == 0.0:
        move = False
    else:
        move = w * path_utility > (1.0 - w) * sensor_gain
    if not move:
        return sensor

    if len(path.nodes) >= 2:
        return Move(path.nodes[1])
    # degenerate path (already at the goal with nothing worth a detour):
    # any feasible move keeps the episode going; fall back to sensing if
    # no move is feasible
    moves = sorted(a.target for a in feasible if isinstance(a, Move))
    if moves:
        return Move(moves[0])
    assert sensor is not None
    return sensor
