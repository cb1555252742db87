"""Factored categorical belief over hidden node states.

Each node carries an independent categorical distribution over a shared state
alphabet; the joint belief is their product. Independence plus known
observation likelihoods make exact Bayesian updates cheap, so no particle
filter is needed anywhere: planners sample complete worlds from the belief and
update it in closed form as observations arrive. Beliefs are value types —
every update returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InconsistentObservationError
from .graph import Action, AgentState

#: A world is a vector of per-node state indices into the belief's alphabet.
WorldState = np.ndarray

#: Per-reading likelihood: (node, observed state, true state) -> probability.
LikelihoodFn = Callable[[int, int, int], float]


@dataclass(frozen=True)
class Observation:
    """A set of per-node state readings plus the action that produced them.

    ``readings`` holds (node id, observed state index) pairs with distinct
    node ids; it may be empty (a sensor with nothing in range). ``action`` is
    None only for the synthetic reveal of the start node at episode setup.
    """

    readings: tuple[tuple[int, int], ...]
    action: Action | None

    def __post_init__(self) -> None:
        nodes = [n for n, _ in self.readings]
        if len(nodes) != len(set(nodes)):
            raise ValueError("readings must have distinct node ids")


@dataclass(frozen=True)
class WorldBelief:
    """Per-node categorical distributions over a shared state alphabet."""

    states: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != len(self.states):
            raise ValueError("probs must be (n_nodes, n_states)")
        if (probs < 0).any():
            raise ValueError("probabilities must be non-negative")
        rows = probs.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-9):
            bad = int(np.argmax(np.abs(rows - 1.0)))
            raise ValueError(f"distribution at node {bad} sums to {rows[bad]}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_nodes(self) -> int:
        return self.probs.shape[0]

    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_index(self, label: str) -> int:
        return self.states.index(label)

    def distribution(self, node: int) -> np.ndarray:
        return self.probs[node]

    def mode(self, node: int) -> int:
        """Most likely state index of a node (lowest index on ties)."""
        return int(np.argmax(self.probs[node]))

    def mode_world(self) -> WorldState:
        """Most likely state per node, as a world vector."""
        return np.argmax(self.probs, axis=1).astype(np.int64)

    def is_point_mass(self, node: int) -> bool:
        return bool(np.max(self.probs[node]) >= 1.0)

    def with_row(self, node: int, row: np.ndarray) -> "WorldBelief":
        probs = np.array(self.probs)
        probs[node] = row
        return WorldBelief(self.states, probs)

    @staticmethod
    def from_shared(states: tuple[str, ...], n_nodes: int, dist) -> "WorldBelief":
        """Belief assigning the same distribution to every node."""
        row = np.asarray(dist, dtype=np.float64)
        return WorldBelief(states, np.tile(row, (n_nodes, 1)))


def bayes_update(
    belief: WorldBelief, obs: Observation, likelihood: LikelihoodFn
) -> WorldBelief:
    """Posterior belief after incorporating one observation.

    For each reading (i, y): posterior_i(x) ∝ likelihood(i, y, x) * prior_i(x),
    renormalized. Nodes without readings are untouched. Raises
    :class:`InconsistentObservationError` if a reading has zero probability
    under every state the belief supports at that node.
    """
    if not obs.readings:
        return belief
    probs = np.array(belief.probs)
    k = belief.n_states
    for node, observed in obs.readings:
        lik = np.array([likelihood(node, observed, x) for x in range(k)])
        post = lik * probs[node]
        total = post.sum()
        if total <= 0.0:
            raise InconsistentObservationError(
                f"observation of state {observed} at node {node} has zero "
                f"probability under the current belief"
            )
        probs[node] = post / total
    return WorldBelief(belief.states, probs)


def collapse_on_visit(belief: WorldBelief, node: int, state: int) -> WorldBelief:
    """Point-mass the node's distribution on ``state``; other nodes unchanged."""
    row = np.zeros(belief.n_states)
    row[state] = 1.0
    return belief.with_row(node, row)


def sample_world(belief: WorldBelief, rng: np.random.Generator) -> WorldState:
    """Draw one complete world, each node independently from its categorical."""
    cum = np.cumsum(belief.probs, axis=1)
    u = rng.random((belief.n_nodes, 1))
    draws = (u > cum).sum(axis=1).astype(np.int64)
    # minimum() guards the 1e-9 normalization slack in the last bin
    return np.minimum(draws, belief.n_states - 1)


def expected_marginal_utility(
    belief: WorldBelief,
    node: int,
    visited: frozenset[int] | set[int],
    utility,
) -> float:
    """Expected utility gain of visiting ``node`` given the visited set.

    Averages the utility's discrete derivative over the node's own belief
    marginal. Where the utility depends on other nodes' states (coverage
    overlaps), those are evaluated at their belief modes — exact for visited
    nodes, whose beliefs are point masses. Already-visited nodes gain nothing.
    """
    if node in visited:
        return 0.0
    world = belief.mode_world()
    cursor = utility.cursor(visited, world)
    row = belief.probs[node]
    return float(
        sum(p * cursor.marginal(node, x) for x, p in enumerate(row) if p > 0.0)
    )


def info_gain_estimate(
    belief: WorldBelief,
    sense_action: Action,
    state: AgentState,
    model,
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Sampled estimate of how much a sensing action sharpens the belief.

    Draws ``n_samples`` simulated observations (sample a world from the
    belief, then a reading set from the sensor model), applies the Bayes
    update to each, and averages the summed per-node gain in mode probability:
    sum_i [max_x posterior_i(x) - max_x prior_i(x)]. Zero for point-mass or
    uninformative-likelihood beliefs. The average (rather than the raw sum
    over samples) keeps the magnitude comparable across sample counts.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    likelihood = model.likelihood_fn(state, sense_action.sensor)
    prior_modes = belief.probs.max(axis=1)
    total = 0.0
    for _ in range(n_samples):
        world = sample_world(belief, rng)
        obs = model.observe(world, state, sense_action.sensor, rng)
        if not obs.readings:
            continue
        posterior = bayes_update(belief, obs, likelihood)
        nodes = [n for n, _ in obs.readings]
        total += float(
            (posterior.probs[nodes].max(axis=1) - prior_modes[nodes]).sum()
        )
    return total / n_samples
