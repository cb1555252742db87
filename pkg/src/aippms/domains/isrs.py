"""Information-search rover domain on a grid.

A rover explores an n-by-n grid holding k rocks and b beacons in distinct
cells. Visiting a good rock yields a fixed reward; visiting any rock exhausts
it, so its belief is pinned to "bad" afterwards. Sensing is possible only at
beacon cells and returns one noisy binary reading per unvisited rock, with
fidelity decaying in beacon-to-rock distance. The rover starts and ends at the
origin cell within a fixed energy budget; movement between entities costs the
Manhattan cell distance, so the location graph is the complete metric closure
over origin, rocks, and beacons rather than one node per cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..belief import WorldBelief, WorldState
from ..errors import GenerationError
from ..graph import LocationGraph, SensorSpec
from ..pomdp import Problem, UtilityFn
from ..sensing import DistanceDecaySensorModel

ISRS_STATES = ("good", "bad", "inert")
GOOD, BAD, INERT = 0, 1, 2

#: Cheap low-fidelity vs expensive high-fidelity sensing, cost in energy units.
DEFAULT_ISRS_SENSORS = (
    SensorSpec("cheap", cost=0.5, max_fidelity=0.8, decay_rate=0.85),
    SensorSpec("expensive", cost=2.0, max_fidelity=1.0, decay_rate=0.95),
)


@dataclass(frozen=True)
class IsrsConfig:
    """Generator parameters for rover instances."""

    grid_side: int = 10
    n_rocks: int = 25
    n_beacons: int = 25
    p_good: float = 0.75
    budget: float = 100.0
    move_cost: float = 1.0
    rock_reward: float = 10.0
    sensors: tuple[SensorSpec, ...] = DEFAULT_ISRS_SENSORS

    def __post_init__(self) -> None:
        if self.n_rocks + self.n_beacons + 1 > self.grid_side**2:
            raise ValueError("origin, rocks, and beacons exceed the grid cells")
        if not 0 <= self.p_good <= 1:
            raise ValueError("p_good must be in [0, 1]")
        if min(self.budget, self.move_cost, self.rock_reward) <= 0:
            raise ValueError("budget, move_cost, and rock_reward must be positive")


class RockUtility(UtilityFn):
    """Fixed reward per visited good rock; modular, hence submodular."""

    n_states = len(ISRS_STATES)

    def __init__(self, is_rock: np.ndarray, reward: float):
        self.is_rock = np.asarray(is_rock, dtype=bool)
        self.reward = float(reward)

    def value(self, visited, world: WorldState) -> float:
        world = np.asarray(world)
        total = 0.0
        for v in visited:
            if self.is_rock[v] and world[v] == GOOD:
                total += self.reward
        return total

    def marginal_gain(self, node: int, visited, world: WorldState) -> float:
        if node in visited or not self.is_rock[node]:
            return 0.0
        return self.reward if int(world[node]) == GOOD else 0.0

    def cursor(self, visited, world: WorldState):
        return _RockCursor(self, visited)


class _RockCursor:
    __slots__ = ("_is_rock", "_reward", "_visited")

    def __init__(self, utility: RockUtility, visited):
        self._is_rock = utility.is_rock
        self._reward = utility.reward
        self._visited = np.zeros(self._is_rock.shape[0], dtype=bool)
        for v in visited:
            self._visited[v] = True

    def marginal(self, node: int, state: int) -> float:
        if self._visited[node] or not self._is_rock[node] or state != GOOD:
            return 0.0
        return self._reward

    def marginal_row(self, node: int) -> np.ndarray:
        row = np.zeros(len(ISRS_STATES))
        if not self._visited[node] and self._is_rock[node]:
            row[GOOD] = self._reward
        return row

    def eu_for(self, node: int, belief_row: np.ndarray) -> float:
        if self._visited[node] or not self._is_rock[node]:
            return 0.0
        return float(belief_row[GOOD]) * self._reward

    def add(self, node: int, state: int) -> float:
        gain = self.marginal(node, state)
        self._visited[node] = True
        return gain

    def clone(self) -> "_RockCursor":
        dup = object.__new__(_RockCursor)
        dup._is_rock = self._is_rock
        dup._reward = self._reward
        dup._visited = self._visited.copy()
        return dup


def isrs_utility(visited, world: WorldState, per_rock_reward: float, is_rock) -> float:
    """Convenience one-shot evaluation of the rock-collection set function."""
    return RockUtility(is_rock, per_rock_reward).value(visited, world)


def generate_isrs_problem(
    config: IsrsConfig, rng: np.random.Generator
) -> tuple[Problem, WorldState]:
    """Sample one rover instance and its hidden world.

    Node 0 is the origin (start and goal); nodes 1..k are rocks, the rest
    beacons, all in distinct grid cells. Each rock is independently good with
    probability ``p_good``; beacons and the origin hold the inert state.
    """
    side = config.grid_side
    k, b = config.n_rocks, config.n_beacons
    total = k + b + 1
    if total > side * side:
        raise GenerationError("not enough grid cells for origin, rocks, and beacons")

    cells = rng.choice(side * side, size=total, replace=False)
    positions = np.column_stack([cells % side, cells // side]).astype(np.float64)

    n = total
    is_rock = np.zeros(n, dtype=bool)
    is_rock[1 : 1 + k] = True
    beacons = frozenset(range(1 + k, n))

    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            manhattan = abs(positions[u, 0] - positions[v, 0]) + abs(
                positions[u, 1] - positions[v, 1]
            )
            edges.append((u, v, float(manhattan * config.move_cost)))
    graph = LocationGraph(positions, edges, start=0, goal=0)

    world = np.full(n, INERT, dtype=np.int64)
    good = rng.random(k) < config.p_good
    world[1 : 1 + k] = np.where(good, GOOD, BAD)

    prior_rows = np.zeros((n, len(ISRS_STATES)))
    prior_rows[:, INERT] = 1.0
    prior_rows[1 : 1 + k] = (config.p_good, 1.0 - config.p_good, 0.0)
    prior = WorldBelief(ISRS_STATES, prior_rows)

    # A sampled rock is exhausted: its belief pins to "bad" once visited.
    post_visit = np.full(n, -1, dtype=np.int64)
    post_visit[is_rock] = BAD

    model = DistanceDecaySensorModel(
        positions,
        len(ISRS_STATES),
        config.sensors,
        readable=is_rock,
        sites=beacons,
        reading_states=2,
    )
    problem = Problem(
        graph=graph,
        sensors=config.sensors,
        utility=RockUtility(is_rock, config.rock_reward),
        prior=prior,
        budget=float(config.budget),
        domain="isrs",
        sensor_model=model,
        sense_sites=beacons,
        post_visit_states=post_visit,
        params={
            "grid_side": side,
            "n_rocks": k,
            "n_beacons": b,
            "p_good": config.p_good,
            "move_cost": config.move_cost,
            "rock_reward": config.rock_reward,
        },
    )
    return problem, world
