"""Shared fixtures: small hand-built problems the suites reuse."""

import numpy as np
import pytest

from aippms import (
    LocationGraph,
    Problem,
    SensorSpec,
    UtilityFn,
    WorldBelief,
    DistanceDecaySensorModel,
)


class TableUtility(UtilityFn):
    """Per-node reward paid when the node is visited in its rewarding state.

    ``rewards[node]`` is earned iff the node's state equals ``good_state``.
    Modular, so marginal gains never interact across nodes.
    """

    def __init__(self, rewards, good_state: int = 0, n_states: int = 2):
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.good_state = good_state
        self.n_states = n_states

    def value(self, visited, world) -> float:
        world = np.asarray(world)
        return float(
            sum(
                self.rewards[v]
                for v in visited
                if world[v] == self.good_state
            )
        )


def line_graph(weights, start=0, goal=None, positions=None):
    """Path graph 0-1-2-... with the given edge weights."""
    n = len(weights) + 1
    if positions is None:
        positions = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
    edges = [(i, i + 1, float(w)) for i, w in enumerate(weights)]
    return LocationGraph(
        positions, edges, start=start, goal=n - 1 if goal is None else goal
    )


def binary_problem(
    graph,
    rewards,
    prior_good,
    budget,
    sensors=(SensorSpec("probe", cost=0.25, max_fidelity=1.0, decay_rate=1.0),),
    sense_sites=None,
):
    """Two-state problem (good/bad) with a table utility and decay sensing."""
    n = graph.n_nodes
    probs = np.column_stack([prior_good, 1.0 - np.asarray(prior_good)])
    prior = WorldBelief(("good", "bad"), probs)
    model = DistanceDecaySensorModel(
        graph.positions, 2, tuple(sensors), sites=sense_sites
    )
    return Problem(
        graph=graph,
        sensors=tuple(sensors),
        utility=TableUtility(rewards),
        prior=prior,
        budget=float(budget),
        domain="table",
        sensor_model=model,
        sense_sites=sense_sites,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
