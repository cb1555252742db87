"""Search-and-rescue coverage domain.

Random geometric graphs on the unit square: nodes join when closer than a
per-instance radius threshold, traversal costs are Euclidean edge lengths, and
the agent starts and ends at the same random node. Each node is independently
high / medium / low accessibility, which fixes the radius of the disk it
covers; utility is the number of grid tiles covered by the union of visited
nodes' disks — monotone submodular by construction. Sensors read every
unvisited node within range, with fidelity decaying in agent-to-node distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..belief import WorldBelief, WorldState
from ..errors import GenerationError
from ..graph import LocationGraph, SensorSpec, all_pairs_shortest_costs, tsp_cost_estimate
from ..pomdp import Problem, UtilityFn
from ..sensing import DistanceDecaySensorModel

SAR_STATES = ("high", "medium", "low")


@dataclass(frozen=True)
class SarSensorConfig:
    """Sensor template; the energy cost is a fraction of the instance budget."""

    id: str
    cost_fraction: float
    max_fidelity: float
    decay_rate: float
    range_cutoff: float


#: Complementary default suite: a cheap wide-area sensor with weak, fast-decay
#: fidelity, and a pricier narrow sensor that reads nearby nodes reliably.
DEFAULT_SAR_SENSORS = (
    SarSensorConfig("wide", cost_fraction=0.02, max_fidelity=0.65,
                    decay_rate=0.30, range_cutoff=0.5),
    SarSensorConfig("focused", cost_fraction=0.10, max_fidelity=0.95,
                    decay_rate=0.60, range_cutoff=0.3),
)


@dataclass(frozen=True)
class SarConfig:
    """Generator parameters for search-and-rescue instances."""

    n_nodes: int = 30
    radius_range: tuple[float, float] = (0.25, 0.4)
    state_distribution: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    coverage_radii: tuple[float, float, float] = (0.25, 0.12, 0.05)
    grid_resolution: int = 100
    budget_fraction: float = 2 / 3
    sensors: tuple[SarSensorConfig, ...] = DEFAULT_SAR_SENSORS
    max_connect_attempts: int = 1000

    def __post_init__(self) -> None:
        if not np.isclose(sum(self.state_distribution), 1.0):
            raise ValueError("state_distribution must sum to 1")
        if min(self.state_distribution) < 0:
            raise ValueError("state_distribution must be non-negative")
        r = self.coverage_radii
        if not (r[0] > r[1] > r[2] > 0):
            raise ValueError("coverage radii must be positive and decreasing")
        if not self.sensors:
            raise ValueError("sensor suite must be non-empty")


class CoverageUtility(UtilityFn):
    """Tiles covered by the union of visited nodes' state-dependent disks.

    The unit square is discretized into ``grid_resolution ** 2`` tile centers;
    the per-(node, state) covered tile sets are precomputed so marginal gains
    are single masked counts.
    """

    def __init__(self, positions: np.ndarray, radii, grid_resolution: int):
        positions = np.asarray(positions, dtype=np.float64)
        self.positions = positions
        self.radii = np.asarray(radii, dtype=np.float64)
        self.grid_resolution = int(grid_resolution)
        self.n_states = len(self.radii)

        g = self.grid_resolution
        centers = (np.arange(g) + 0.5) / g
        xs, ys = np.meshgrid(centers, centers, indexing="ij")
        tiles = np.column_stack([xs.ravel(), ys.ravel()])
        self.n_tiles = tiles.shape[0]

        self._tile_sets: list[list[np.ndarray]] = []
        for pos in positions:
            dist = np.sqrt(((tiles - pos) ** 2).sum(axis=1))
            self._tile_sets.append(
                [np.flatnonzero(dist <= r).astype(np.int32) for r in self.radii]
            )

    def tiles_covered(self, node: int, state: int) -> np.ndarray:
        return self._tile_sets[node][state]

    def value(self, visited, world: WorldState) -> float:
        covered = np.zeros(self.n_tiles, dtype=bool)
        for v in visited:
            covered[self._tile_sets[v][int(world[v])]] = True
        return float(covered.sum())

    def marginal_gain(self, node: int, visited, world: WorldState) -> float:
        return self.cursor(visited, world).marginal(node, int(world[node]))

    def cursor(self, visited, world: WorldState):
        return _CoverageCursor(self, visited, world)


class _CoverageCursor:
    __slots__ = ("_sets", "_covered", "_visited")

    def __init__(self, utility: CoverageUtility, visited, world: WorldState):
        self._sets = utility._tile_sets
        self._covered = np.zeros(utility.n_tiles, dtype=bool)
        self._visited = np.zeros(len(self._sets), dtype=bool)
        for v in visited:
            self._covered[self._sets[v][int(world[v])]] = True
            self._visited[v] = True

    def marginal(self, node: int, state: int) -> float:
        if self._visited[node]:
            return 0.0
        idx = self._sets[node][state]
        return float(idx.size - np.count_nonzero(self._covered[idx]))

    def marginal_row(self, node: int) -> np.ndarray:
        n_states = len(self._sets[node])
        return np.array([self.marginal(node, x) for x in range(n_states)])

    def eu_for(self, node: int, belief_row: np.ndarray) -> float:
        if self._visited[node]:
            return 0.0
        sets = self._sets[node]
        covered = self._covered
        total = 0.0
        for x, p in enumerate(belief_row):
            if p > 0.0:
                idx = sets[x]
                total += p * (idx.size - np.count_nonzero(covered[idx]))
        return total

    def add(self, node: int, state: int) -> float:
        gain = self.marginal(node, state)
        self._covered[self._sets[node][state]] = True
        self._visited[node] = True
        return gain

    def clone(self) -> "_CoverageCursor":
        dup = object.__new__(_CoverageCursor)
        dup._sets = self._sets
        dup._covered = self._covered.copy()
        dup._visited = self._visited.copy()
        return dup


def coverage_utility(
    visited, world: WorldState, positions, radii, grid_resolution: int
) -> float:
    """Convenience one-shot evaluation of the coverage set function."""
    return CoverageUtility(positions, radii, grid_resolution).value(visited, world)


def generate_sar_problem(
    config: SarConfig, rng: np.random.Generator
) -> tuple[Problem, WorldState]:
    """Sample one search-and-rescue instance and its hidden world.

    Node positions are uniform on the unit square; positions are resampled
    until the distance-threshold graph is connected. The budget is the
    configured fraction of a heuristic full-coverage tour cost, so not every
    node can be visited. Sensor energy costs are resolved against the budget.
    """
    n = config.n_nodes
    rho = float(rng.uniform(*config.radius_range))

    graph = None
    for _ in range(config.max_connect_attempts):
        positions = rng.random((n, 2))
        diff = positions[:, None, :] - positions[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        iu, ju = np.triu_indices(n, k=1)
        close = dist[iu, ju] < rho
        edges = [
            (int(u), int(v), float(dist[u, v]))
            for u, v in zip(iu[close], ju[close])
        ]
        if _connected(n, edges):
            start = int(rng.integers(n))
            graph = LocationGraph(positions, edges, start=start, goal=start)
            break
    if graph is None:
        raise GenerationError(
            f"no connected graph within {config.max_connect_attempts} samples "
            f"(n={n}, rho={rho:.3f})"
        )

    world = _sample_states(config.state_distribution, n, rng)

    costs = all_pairs_shortest_costs(graph)
    tour = tsp_cost_estimate(graph, graph.start, costs)
    budget = config.budget_fraction * tour

    sensors = tuple(
        SensorSpec(
            id=s.id,
            cost=s.cost_fraction * budget,
            max_fidelity=s.max_fidelity,
            decay_rate=s.decay_rate,
            range_cutoff=s.range_cutoff,
        )
        for s in config.sensors
    )
    model = DistanceDecaySensorModel(graph.positions, len(SAR_STATES), sensors)
    utility = CoverageUtility(
        graph.positions, config.coverage_radii, config.grid_resolution
    )
    prior = WorldBelief.from_shared(SAR_STATES, n, config.state_distribution)
    problem = Problem(
        graph=graph,
        sensors=sensors,
        utility=utility,
        prior=prior,
        budget=float(budget),
        domain="sar",
        sensor_model=model,
        params={
            "rho": rho,
            "state_distribution": list(config.state_distribution),
            "coverage_radii": list(config.coverage_radii),
            "grid_resolution": config.grid_resolution,
            "budget_fraction": config.budget_fraction,
            "tour_cost": float(tour),
        },
    )
    return problem, world


def _sample_states(distribution, n: int, rng: np.random.Generator) -> WorldState:
    cum = np.cumsum(np.asarray(distribution, dtype=np.float64))
    u = rng.random((n, 1))
    draws = (u > cum).sum(axis=1).astype(np.int64)
    return np.minimum(draws, len(cum) - 1)


def _connected(n: int, edges) -> bool:
    if n <= 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        node = stack.pop()
        for t in adj[node]:
            if not seen[t]:
                seen[t] = True
                stack.append(t)
    return bool(seen.all())
