"""Constrained Monte Carlo tree search over action-observation histories.

Standard POMCP with two changes. First, every node's children are exactly the
budget-feasible actions, so constraint violation is structurally impossible
anywhere in the search; the search never needs a penalty term. Second, leaf
values come from a pluggable rollout policy: either uniform-random over
feasible actions, or a greedy cost-benefit policy that scores moves by
expected marginal utility per unit energy and sensing by estimated
information gain per unit energy, then samples through a softmax.

Worlds are sampled once per simulation from the root belief (the hidden state
is static, so there is no transition noise to track), and the exact factored
belief is carried down each simulated history for the rollout policy's
benefit — no particle sets anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .belief import WorldBelief, WorldState
from .errors import TerminalStateError
from .graph import Action, AgentState
from .pomdp import Problem
from .runtime import ProblemRuntime, runtime_of


@dataclass(frozen=True)
class PlannerConfig:
    """Search and rollout parameters.

    ``epsilon`` ends simulations once the discount ``gamma ** depth`` falls
    below it; the equivalent depth cap is resolved at construction. The
    cost-benefit rollout samples actions through a softmax over benefit/cost
    ratios; with ``scale_normalize`` the ratios are divided by their largest
    magnitude first, making the temperature scale-free.
    """

    n_simulations: int = 1000
    ucb_c: float = 10.0
    gamma: float = 0.95
    epsilon: float = 0.01
    rollout: str = "gcb"
    ig_samples: int = 10
    softmax_temperature: float = 1.0
    scale_normalize: bool = True
    max_depth: int = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.n_simulations < 1:
            raise ValueError("n_simulations must be positive")
        if self.ucb_c < 0:
            raise ValueError("ucb_c must be non-negative")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        if self.rollout not in ("gcb", "random"):
            raise ValueError("rollout must be 'gcb' or 'random'")
        if self.ig_samples < 1:
            raise ValueError("ig_samples must be positive")
        if self.softmax_temperature <= 0:
            raise ValueError("softmax_temperature must be positive")
        depth, x = 0, 1.0
        while x >= self.epsilon:
            x *= self.gamma
            depth += 1
        object.__setattr__(self, "max_depth", depth)


class TreeNode:
    """Per-history statistics: N(h), and N(ha), V(ha) per feasible action."""

    __slots__ = ("action_ids", "visits", "child_visits", "child_values")

    def __init__(self, action_ids: np.ndarray):
        self.action_ids = action_ids
        self.visits = 0
        self.child_visits = np.zeros(action_ids.size, dtype=np.int64)
        self.child_values = np.zeros(action_ids.size, dtype=np.float64)

    def update(self, index: int, value: float) -> None:
        self.visits += 1
        self.child_visits[index] += 1
        self.child_values[index] += (value - self.child_values[index]) / (
            self.child_visits[index]
        )


@dataclass
class SearchTree:
    """History-keyed search tree; the planning root is the empty history."""

    nodes: dict[tuple, TreeNode] = field(default_factory=dict)

    def root(self) -> TreeNode | None:
        return self.nodes.get(())


def ucb_select(node: TreeNode, c: float) -> int:
    """Action id maximizing V(ha) + c * sqrt(ln N(h) / N(ha)).

    Unvisited children score +infinity and are taken first; all ties resolve
    to the lowest action id.
    """
    return int(node.action_ids[_ucb_index(node, c)])


def _ucb_index(node: TreeNode, c: float) -> int:
    visits = node.child_visits
    i = int(np.argmin(visits))
    if visits[i] == 0:
        return i
    scores = node.child_values + c * np.sqrt(np.log(node.visits) / visits)
    return int(np.argmax(scores))


def softmax_probabilities(
    utilities: np.ndarray, temperature: float, scale_normalize: bool
) -> np.ndarray:
    """Selection distribution the cost-benefit rollout samples from."""
    u = np.asarray(utilities, dtype=np.float64)
    if scale_normalize:
        scale = float(np.max(np.abs(u)))
        if scale > 0.0:
            u = u / scale
    z = u / temperature
    z = z - z.max()
    p = np.exp(z)
    return p / p.sum()


def _softmax_draw(utilities, temperature, scale_normalize, rng) -> int:
    p = softmax_probabilities(utilities, temperature, scale_normalize)
    cum = np.cumsum(p)
    return min(int(np.searchsorted(cum, rng.random() * cum[-1])), p.size - 1)


def _gcb_index(rt, cfg, ids, costs, current, visited, belief, cursor, rng) -> int:
    """Pick a feasible-action index by softmax over benefit-per-cost ratios.

    Zero-benefit actions are never sampled while any action has a strictly
    positive ratio (so e.g. sensing an already-certain world cannot displace a
    rewarding move); when nothing has positive benefit the softmax covers all
    feasible actions.
    """
    n = rt.n
    vals = np.empty(ids.size)
    for i in range(ids.size):
        aid = ids[i]
        if aid < n:
            vals[i] = 0.0 if visited[aid] else cursor.eu_for(aid, belief[aid])
        else:
            vals[i] = rt.info_gain(
                aid - n, current, visited, belief, cfg.ig_samples, rng
            )
    vals /= costs
    positive = np.flatnonzero(vals > 0.0)
    if positive.size and positive.size < vals.size:
        i = _softmax_draw(
            vals[positive], cfg.softmax_temperature, cfg.scale_normalize, rng
        )
        return int(positive[i])
    return _softmax_draw(vals, cfg.softmax_temperature, cfg.scale_normalize, rng)


def _rollout(rt, cfg, current, visited, budget, belief, cursor, world, depth, rng):
    """Play the configured rollout policy to the depth cutoff or termination."""
    gcb = cfg.rollout == "gcb"
    max_depth = cfg.max_depth
    gamma = cfg.gamma
    total, g = 0.0, 1.0
    while depth < max_depth:
        ids, costs = rt.feasible(current, budget)
        if ids.size == 0:
            break
        if gcb:
            i = _gcb_index(rt, cfg, ids, costs, current, visited, belief, cursor, rng)
        else:
            i = int(rng.integers(ids.size))
        aid = int(ids[i])
        if aid < rt.n:
            reward = rt.apply_move(aid, visited, belief, cursor, world)
            current = aid
        else:
            # the observation only matters to the belief the GCB policy reads
            rt.apply_sense(
                aid - rt.n, current, visited, belief, world, rng,
                want_key=False, update_belief=gcb,
            )
            reward = 0.0
        budget = budget - float(costs[i])
        total += g * reward
        g *= gamma
        depth += 1
    return total


def _simulate(
    rt, tree, cfg, current, visited, budget, belief, cursor, world,
    history, depth, rng, action_probe, backup_probe,
):
    if depth >= cfg.max_depth:
        return 0.0
    ids, costs = rt.feasible(current, budget)
    if ids.size == 0:
        return 0.0
    node = tree.nodes.get(history)
    if node is None:
        tree.nodes[history] = TreeNode(ids)
        return _rollout(
            rt, cfg, current, visited, budget, belief, cursor, world, depth, rng
        )

    i = _ucb_index(node, cfg.ucb_c)
    aid = int(node.action_ids[i])
    if action_probe is not None:
        action_probe(current, budget, aid)
    if aid < rt.n:
        reward = rt.apply_move(aid, visited, belief, cursor, world)
        okey = int(world[aid])
        nxt = aid
    else:
        okey = rt.apply_sense(
            aid - rt.n, current, visited, belief, world, rng,
            want_key=True, update_belief=(cfg.rollout == "gcb"),
        )
        reward = 0.0
        nxt = current
    value = reward + cfg.gamma * _simulate(
        rt, tree, cfg, nxt, visited, budget - float(costs[i]), belief, cursor,
        world, history + ((aid, okey),), depth + 1, rng, action_probe, backup_probe,
    )
    node.update(i, value)
    if backup_probe is not None:
        backup_probe(history, aid, value)
    return value


def _sim_context(problem, state, belief, world):
    """Mutable primitive copies of one simulation's state."""
    rt = runtime_of(problem)
    visited = rt.visited_mask(state)
    bel = np.array(belief.probs)
    cursor = rt.utility.cursor(state.visited, np.asarray(world))
    return rt, visited, bel, cursor


def plan(
    problem: Problem,
    state: AgentState,
    belief: WorldBelief,
    config: PlannerConfig,
    rng: np.random.Generator,
    return_tree: bool = False,
    action_probe=None,
    backup_probe=None,
):
    """Choose the next action by constrained POMCP from the current state.

    Runs ``config.n_simulations`` root simulations, each against a world
    sampled from ``belief``, and returns the feasible root action with the
    highest estimated value (no exploration bonus at the final pick; ties to
    the lowest action id). Deterministic given the rng state. Raises
    :class:`TerminalStateError` when no action is feasible.

    ``action_probe(current, budget, action_id)`` and
    ``backup_probe(history, action_id, value)`` are optional instrumentation
    hooks for tests; they must not mutate anything.
    """
    rt = runtime_of(problem)
    root_ids, _ = rt.feasible(state.current, state.remaining_budget)
    if root_ids.size == 0:
        raise TerminalStateError("no feasible action; episode is over")
    tree = SearchTree()
    if root_ids.size == 1:
        # forced action: the search could not change the choice
        action = rt.action_from_id(int(root_ids[0]))
        return (action, tree) if return_tree else action

    visited0 = rt.visited_mask(state)
    root_cursor = rt.utility.cursor(state.visited, belief.mode_world())
    for _ in range(config.n_simulations):
        world = rt.sample_world_arr(belief.probs, rng)
        _simulate(
            rt, tree, config, state.current, visited0.copy(),
            state.remaining_budget, np.array(belief.probs), root_cursor.clone(),
            world, (), 0, rng, action_probe, backup_probe,
        )
    root = tree.nodes[()]
    best = int(np.argmax(root.child_values))
    action = rt.action_from_id(int(root.action_ids[best]))
    return (action, tree) if return_tree else action


def simulate(
    tree: SearchTree,
    problem: Problem,
    state: AgentState,
    world: WorldState,
    belief: WorldBelief,
    history: tuple,
    depth: int,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> float:
    """One tree-search simulation pass; returns its discounted return.

    Expands the first unseen history into a leaf (all feasible children at
    zero counts and values), evaluates leaves with the rollout policy, and
    backs values up by incremental means.
    """
    rt, visited, bel, cursor = _sim_context(problem, state, belief, world)
    return _simulate(
        rt, tree, config, state.current, visited, state.remaining_budget,
        bel, cursor, np.asarray(world), history, depth, rng, None, None,
    )


def rollout(
    problem: Problem,
    state: AgentState,
    world: WorldState,
    belief: WorldBelief,
    depth: int,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> float:
    """Discounted return of playing the rollout policy from ``state``.

    Each step picks an action with the configured policy, steps the
    deterministic model against ``world``, folds the observation into the
    carried belief, and accumulates gamma-discounted rewards until the depth
    cutoff or termination.
    """
    rt, visited, bel, cursor = _sim_context(problem, state, belief, world)
    return _rollout(
        rt, config, state.current, visited, state.remaining_budget,
        bel, cursor, np.asarray(world), depth, rng,
    )


def gcb_rollout_action(
    problem: Problem,
    state: AgentState,
    belief: WorldBelief,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> Action:
    """Sample one action from the greedy cost-benefit rollout policy.

    Moves are scored by expected marginal utility per unit cost, sensing by
    estimated information gain per unit cost, and the action is drawn from a
    softmax over the ratios.
    """
    rt = runtime_of(problem)
    ids, costs = rt.feasible(state.current, state.remaining_budget)
    if ids.size == 0:
        raise TerminalStateError("no feasible action")
    visited = rt.visited_mask(state)
    cursor = rt.utility.cursor(state.visited, belief.mode_world())
    i = _gcb_index(
        rt, config, ids, costs, state.current, visited,
        np.array(belief.probs), cursor, rng,
    )
    return rt.action_from_id(int(ids[i]))


def random_rollout_action(
    problem: Problem, state: AgentState, rng: np.random.Generator
) -> Action:
    """Uniform draw over the feasible actions."""
    rt = runtime_of(problem)
    ids, _ = rt.feasible(state.current, state.remaining_budget)
    if ids.size == 0:
        raise TerminalStateError("no feasible action")
    return rt.action_from_id(int(ids[rng.integers(ids.size)]))
