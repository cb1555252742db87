"""Location graphs, action costs, and budget feasibility.

The agent moves on a weighted undirected graph and must end each episode at a
goal node without overspending its energy budget. Because traversal costs are
deterministic, feasibility of any state reduces to a lookup in the all-pairs
shortest-cost matrix: a state is feasible iff the remaining budget covers the
cheapest return to the goal, and an action is feasible iff the state it leads
to is feasible. Everything here is immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError, InvalidActionError


@dataclass(frozen=True)
class Move:
    """Traverse an edge to a neighboring node."""

    target: int


@dataclass(frozen=True)
class Sense:
    """Fire a sensor from the current node."""

    sensor: str


Action = Move | Sense


@dataclass(frozen=True)
class SensorSpec:
    """Sensor parameters: energy cost plus a distance-decaying fidelity model.

    A reading of a node at distance d is correct with probability
    ``max_fidelity * decay_rate ** d``. ``range_cutoff`` optionally limits
    which nodes produce readings at all (None means unlimited).
    """

    id: str
    cost: float
    max_fidelity: float
    decay_rate: float
    range_cutoff: float | None = None

    def __post_init__(self) -> None:
        if self.cost <= 0:
            raise ValueError(f"sensor {self.id!r}: cost must be positive")
        if not 0 < self.max_fidelity <= 1:
            raise ValueError(f"sensor {self.id!r}: max_fidelity must be in (0, 1]")
        if not 0 < self.decay_rate <= 1:
            raise ValueError(f"sensor {self.id!r}: decay_rate must be in (0, 1]")
        if self.range_cutoff is not None and self.range_cutoff <= 0:
            raise ValueError(f"sensor {self.id!r}: range_cutoff must be positive")

    def correct_prob(self, distance: float) -> float:
        """Probability that a reading at this distance matches the true state."""
        return self.max_fidelity * self.decay_rate**distance


@dataclass(frozen=True)
class AgentState:
    """Fully observable part of the planning state.

    ``current`` is the node the agent occupies, ``visited`` the set of nodes
    whose true state has been revealed by visiting, and ``remaining_budget``
    the energy left out of the instance budget.
    """

    current: int
    visited: frozenset[int]
    remaining_budget: float

    def __post_init__(self) -> None:
        if self.current not in self.visited:
            raise ValueError("current node must be in the visited set")


class LocationGraph:
    """Weighted undirected location graph with designated start and goal.

    Nodes are integers 0..n-1 with 2D positions (used for sensing distances,
    not traversal). Edge weights are strictly positive energy costs. The graph
    must form exactly one connected component; construction fails otherwise.
    """

    def __init__(
        self,
        positions: np.ndarray,
        edges: list[tuple[int, int, float]],
        start: int,
        goal: int,
    ):
        positions = np.asarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise GraphError("positions must be an (n, 2) array")
        n = positions.shape[0]
        if not (0 <= start < n and 0 <= goal < n):
            raise GraphError("start/goal must be valid node ids")

        seen: set[tuple[int, int]] = set()
        canon: list[tuple[int, int, float]] = []
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) references an unknown node")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if w <= 0:
                raise GraphError(f"edge ({u}, {v}) has non-positive weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge ({u}, {v})")
            seen.add(key)
            canon.append((key[0], key[1], w))
        canon.sort()

        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in canon:
            adj[u].append((v, w))
            adj[v].append((u, w))

        neighbors = []
        neighbor_costs = []
        for node_adj in adj:
            node_adj.sort()
            neighbors.append(np.array([t for t, _ in node_adj], dtype=np.int64))
            neighbor_costs.append(np.array([w for _, w in node_adj], dtype=np.float64))

        positions.setflags(write=False)
        self.positions = positions
        self.edges: tuple[tuple[int, int, float], ...] = tuple(canon)
        self.start = int(start)
        self.goal = int(goal)
        self._neighbors = tuple(neighbors)
        self._neighbor_costs = tuple(neighbor_costs)
        self._edge_weight = {(u, v): w for u, v, w in canon}

        unreachable = _first_unreachable(self._neighbors, n)
        if unreachable is not None:
            raise GraphError(
                f"graph is disconnected: no path between nodes 0 and {unreachable}"
            )

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def neighbors(self, node: int) -> np.ndarray:
        """Sorted ids of nodes adjacent to ``node``."""
        return self._neighbors[node]

    def neighbor_costs(self, node: int) -> np.ndarray:
        """Edge weights aligned with :meth:`neighbors`."""
        return self._neighbor_costs[node]

    def edge_weight(self, u: int, v: int) -> float:
        key = (min(u, v), max(u, v))
        try:
            return self._edge_weight[key]
        except KeyError:
            raise GraphError(f"no edge between {u} and {v}") from None

    def __repr__(self) -> str:
        return (
            f"LocationGraph(n={self.n_nodes}, m={len(self.edges)}, "
            f"start={self.start}, goal={self.goal})"
        )


def _first_unreachable(neighbors: tuple[np.ndarray, ...], n: int) -> int | None:
    reached = np.zeros(n, dtype=bool)
    reached[0] = True
    frontier = [0]
    while frontier:
        node = frontier.pop()
        for t in neighbors[node]:
            if not reached[t]:
                reached[t] = True
                frontier.append(int(t))
    missing = np.flatnonzero(~reached)
    return int(missing[0]) if missing.size else None


@dataclass(frozen=True)
class CostMatrix:
    """All-pairs shortest traversal costs plus next-hop data for path recovery."""

    costs: np.ndarray
    next_hop: np.ndarray = field(repr=False)

    def cost(self, u: int, v: int) -> float:
        return float(self.costs[u, v])

    def shortest_path(self, u: int, v: int) -> list[int]:
        """Concrete node sequence of a minimum-cost path from u to v."""
        path = [u]
        node = u
        while node != v:
            node = int(self.next_hop[node, v])
            path.append(node)
        return path


def all_pairs_shortest_costs(graph: LocationGraph) -> CostMatrix:
    """Shortest-path cost between every node pair, by Floyd-Warshall.

    Computed once per problem and cached on the Problem; solvers only ever
    look entries up.
    """
    n = graph.n_nodes
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    nxt = np.full((n, n), -1, dtype=np.int64)
    nxt[np.arange(n), np.arange(n)] = np.arange(n)
    for u, v, w in graph.edges:
        dist[u, v] = w
        dist[v, u] = w
        nxt[u, v] = v
        nxt[v, u] = u

    for k in range(n):
        alt = dist[:, k, None] + dist[None, k, :]
        better = alt < dist
        if better.any():
            dist = np.where(better, alt, dist)
            nxt = np.where(better, np.broadcast_to(nxt[:, k, None], (n, n)), nxt)

    if not np.isfinite(dist).all():
        u, v = np.argwhere(~np.isfinite(dist))[0]
        raise GraphError(f"graph is disconnected: no path between nodes {u} and {v}")

    dist.setflags(write=False)
    nxt.setflags(write=False)
    return CostMatrix(costs=dist, next_hop=nxt)


def action_cost(
    state: AgentState,
    action: Action,
    graph: LocationGraph,
    sensors: list[SensorSpec] | tuple[SensorSpec, ...],
) -> float:
    """Energy cost of an action: edge weight for moves, sensor cost for sensing."""
    if isinstance(action, Move):
        if action.target == state.current:
            raise InvalidActionError("move target must differ from the current node")
        return graph.edge_weight(state.current, action.target)
    for spec in sensors:
        if spec.id == action.sensor:
            return spec.cost
    raise InvalidActionError(f"unknown sensor {action.sensor!r}")


def is_feasible_state(state: AgentState, costs: CostMatrix, goal: int) -> bool:
    """Whether the remaining budget covers the cheapest return to the goal.

    Uses >= rather than a strict inequality so that a budget exactly equal to
    the return cost stays feasible.
    """
    return state.remaining_budget >= costs.costs[state.current, goal]


def feasible_actions(
    state: AgentState,
    graph: LocationGraph,
    sensors: list[SensorSpec] | tuple[SensorSpec, ...],
    costs: CostMatrix,
    sense_sites: frozenset[int] | None = None,
) -> set[Action]:
    """Actions whose successor state can still reach the goal within budget.

    An action is kept iff ``remaining_budget - cost(a) >= cost_to_goal(next)``
    where ``next`` is the move target, or the current node for sensing. The
    subtraction is evaluated exactly as the successor's budget will be, so
    pruning is sound bit-for-bit under floating point. ``sense_sites``
    optionally restricts sensing to a subset of nodes (e.g. beacon cells);
    None allows sensing anywhere. An empty result signals a terminal state.
    """
    v = state.current
    budget = state.remaining_budget
    to_goal = costs.costs[:, graph.goal]
    out: set[Action] = set()
    targets = graph.neighbors(v)
    next_budgets = budget - graph.neighbor_costs(v)
    for t, nb in zip(targets, next_budgets):
        if nb >= to_goal[t]:
            out.add(Move(int(t)))
    if sense_sites is None or v in sense_sites:
        for spec in sensors:
            if budget - spec.cost >= to_goal[v]:
                out.add(Sense(spec.id))
    return out


def tsp_cost_estimate(graph: LocationGraph, start: int, costs: CostMatrix) -> float:
    """Cost of a heuristic closed tour visiting every node, from ``start``.

    Works on the shortest-path metric closure: nearest-neighbor construction
    followed by 2-opt improvement until no swap helps. Deterministic given the
    graph; used to calibrate instance budgets against full-coverage cost.
    """
    n = graph.n_nodes
    d = costs.costs
    if n == 1:
        return 0.0

    tour = [start]
    unvisited = np.ones(n, dtype=bool)
    unvisited[start] = False
    node = start
    for _ in range(n - 1):
        cand = np.flatnonzero(unvisited)
        node = int(cand[np.argmin(d[node, cand])])
        unvisited[node] = False
        tour.append(node)

    # 2-opt on tour positions: reversing tour[i:j+1] only changes the two
    # boundary legs, so the delta is O(1) to evaluate.
    improved = True
    while improved:
        improved = False
        best_delta = -1e-12
        best_swap = None
        for i in range(n - 1):
            a, b = tour[i], tour[i + 1]
            for j in range(i + 1, n):
                c, e = tour[j], tour[(j + 1) % n]
                delta = (d[a, c] + d[b, e]) - (d[a, b] + d[c, e])
                if delta < best_delta:
                    best_delta = delta
                    best_swap = (i, j)
        if best_swap is not None:
            i, j = best_swap
            tour[i + 1 : j + 1] = reversed(tour[i + 1 : j + 1])
            improved = True

    total = sum(d[tour[i], tour[(i + 1) % n]] for i in range(n))
    return float(total)
