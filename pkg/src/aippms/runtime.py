"""Array-compiled problem view used inside planning simulations.

Thousands of simulated steps per decision make object churn the bottleneck,
so the planner works on primitives: an action is an integer id (move ids are
target node ids, sense ids follow at ``n_nodes + sensor_index``; ties resolve
to the lowest id), the visited set is a byte mask, and the belief is a bare
(n, k) array mutated in place. One :class:`ProblemRuntime` per problem is
built lazily and cached; it is read-only after construction.
"""

from __future__ import annotations

import numpy as np

from .errors import InconsistentObservationError, InvalidActionError
from .graph import Action, AgentState, Move, Sense
from .pomdp import Problem
from .sensing import DistanceDecaySensorModel, sample_readings


class ProblemRuntime:
    def __init__(self, problem: Problem):
        model = problem.sensor_model
        if not isinstance(model, DistanceDecaySensorModel):
            raise TypeError(
                "planning requires a DistanceDecaySensorModel-based problem"
            )
        graph = problem.graph
        n = graph.n_nodes
        self.problem = problem
        self.n = n
        self.k = problem.prior.n_states
        self.goal = graph.goal
        self.to_goal = np.ascontiguousarray(problem.costs.costs[:, graph.goal])
        self.neighbors = tuple(graph.neighbors(v) for v in range(n))
        self.neighbor_costs = tuple(graph.neighbor_costs(v) for v in range(n))
        self.sensor_ids = tuple(s.id for s in problem.sensors)
        self.sensor_costs = np.array([s.cost for s in problem.sensors])
        self.n_sensors = len(self.sensor_ids)

        if problem.sense_sites is None:
            self.sense_ok = np.ones(n, dtype=bool)
        else:
            self.sense_ok = np.zeros(n, dtype=bool)
            self.sense_ok[list(problem.sense_sites)] = True

        self.reading_states = model.reading_states
        self.sense_targets = []
        self.sense_q = []
        for sid in self.sensor_ids:
            per_node_t = []
            per_node_q = []
            for v in range(n):
                if self.sense_ok[v]:
                    targets = model.targets(v, sid)
                    per_node_t.append(targets)
                    per_node_q.append(model.correct_probs(v, sid, targets))
                else:
                    per_node_t.append(np.empty(0, dtype=np.int64))
                    per_node_q.append(np.empty(0))
            self.sense_targets.append(per_node_t)
            self.sense_q.append(per_node_q)

        if problem.post_visit_states is None:
            self.post_visit = np.full(n, -1, dtype=np.int64)
        else:
            self.post_visit = np.asarray(problem.post_visit_states, dtype=np.int64)
        self.utility = problem.utility

    # -- action id mapping --------------------------------------------------

    def action_from_id(self, aid: int) -> Action:
        if aid < self.n:
            return Move(int(aid))
        return Sense(self.sensor_ids[aid - self.n])

    def action_id(self, action: Action) -> int:
        if isinstance(action, Move):
            return action.target
        try:
            return self.n + self.sensor_ids.index(action.sensor)
        except ValueError:
            raise InvalidActionError(f"unknown sensor {action.sensor!r}") from None

    # -- feasibility ---------------------------------------------------------

    def feasible(self, current: int, budget: float) -> tuple[np.ndarray, np.ndarray]:
        """Feasible action ids at a node (ascending: moves then sensors),
        paired with their energy costs.

        An action is feasible iff ``budget - cost`` still covers the shortest
        return to the goal from where the action lands; the subtraction here
        is the successor's budget bit-for-bit, so pruning is exact.
        """
        nbrs = self.neighbors[current]
        ncosts = self.neighbor_costs[current]
        keep = budget - ncosts >= self.to_goal[nbrs]
        moves, mcosts = nbrs[keep], ncosts[keep]
        if self.sense_ok[current]:
            smask = budget - self.sensor_costs >= self.to_goal[current]
            if smask.any():
                ids = np.concatenate([moves, self.n + np.flatnonzero(smask)])
                costs = np.concatenate([mcosts, self.sensor_costs[smask]])
                return ids, costs
        return moves, mcosts

    def feasible_ids(self, current: int, budget: float) -> np.ndarray:
        return self.feasible(current, budget)[0]

    # -- primitive state -----------------------------------------------------

    def visited_mask(self, state: AgentState) -> np.ndarray:
        mask = np.zeros(self.n, dtype=np.uint8)
        mask[list(state.visited)] = 1
        return mask

    def apply_move(self, target, visited, belief, cursor, world) -> float:
        """Visit ``target``: reward, belief collapse, mask update (in place)."""
        reward = cursor.add(int(target), int(world[target]))
        visited[target] = 1
        pv = self.post_visit[target]
        collapse = int(world[target]) if pv < 0 else int(pv)
        belief[target] = 0.0
        belief[target, collapse] = 1.0
        return reward

    def apply_sense(
        self,
        sensor_idx: int,
        current: int,
        visited,
        belief,
        world,
        rng,
        want_key: bool,
        update_belief: bool = True,
    ):
        """Draw readings and fold them into the belief (in place).

        Returns a hashable observation key when ``want_key`` (tree nodes need
        it); random rollouts pass ``update_belief=False`` to skip work whose
        result nothing reads.
        """
        targets = self.sense_targets[sensor_idx][current]
        live = visited[targets] == 0
        targets = targets[live]
        if targets.size == 0:
            return () if want_key else None
        if not update_belief and not want_key:
            return None
        q = self.sense_q[sensor_idx][current][live]
        ys = sample_readings(world[targets], q, self.reading_states, rng)
        if update_belief:
            rs = self.reading_states
            rows = belief[targets]
            lik = np.zeros((targets.size, self.k))
            lik[:, :rs] = ((1.0 - q) / (rs - 1))[:, None]
            lik[np.arange(targets.size), ys] = q
            post = rows * lik
            totals = post.sum(axis=1, keepdims=True)
            if (totals <= 0.0).any():
                bad = int(targets[int(np.argmin(totals[:, 0]))])
                raise InconsistentObservationError(
                    f"simulated reading impossible under belief at node {bad}"
                )
            belief[targets] = post / totals
        if want_key:
            return (tuple(int(t) for t in targets), tuple(int(y) for y in ys))
        return None

    def sample_world_arr(self, probs: np.ndarray, rng) -> np.ndarray:
        cum = np.cumsum(probs, axis=1)
        u = rng.random((self.n, 1))
        # minimum() guards the 1e-9 normalization slack in the last bin
        return np.minimum((u > cum).sum(axis=1), self.k - 1)

    def info_gain(
        self, sensor_idx: int, current: int, visited, belief, n_samples: int, rng
    ) -> float:
        """Vectorized counterpart of :func:`aippms.belief.info_gain_estimate`.

        Sample worlds and readings only for non-point-mass targets (point
        masses contribute exactly zero gain), then average the summed increase
        in per-node mode probability over ``n_samples`` simulated updates.
        """
        targets = self.sense_targets[sensor_idx][current]
        live = visited[targets] == 0
        targets = targets[live]
        if targets.size == 0:
            return 0.0
        rows = belief[targets]
        prior_mode = rows.max(axis=1)
        open_mask = prior_mode < 1.0
        if not open_mask.any():
            return 0.0
        targets = targets[open_mask]
        rows = rows[open_mask]
        prior_mode = prior_mode[open_mask]
        q = self.sense_q[sensor_idx][current][live][open_mask]

        m = targets.size
        rs = self.reading_states
        cum = np.cumsum(rows, axis=1)
        u = rng.random((n_samples, m, 1))
        trues = np.minimum((u > cum[None, :, :]).sum(axis=2), self.k - 1)
        hit = rng.random((n_samples, m)) < q[None, :]
        offsets = rng.integers(1, rs, size=(n_samples, m))
        ys = np.where(hit, trues, (trues + offsets) % rs)

        lik = np.zeros((n_samples, m, self.k))
        lik[:, :, :rs] = ((1.0 - q) / (rs - 1))[None, :, None]
        s_idx, m_idx = np.meshgrid(
            np.arange(n_samples), np.arange(m), indexing="ij"
        )
        lik[s_idx, m_idx, ys] = q[None, :] * np.ones((n_samples, m))
        post = rows[None, :, :] * lik
        mode_gain = post.max(axis=2) / post.sum(axis=2) - prior_mode[None, :]
        return float(mode_gain.sum(axis=1).mean())


def runtime_of(problem: Problem) -> ProblemRuntime:
    """Lazily built, cached runtime for a problem."""
    rt = getattr(problem, "_runtime", None)
    if rt is None:
        rt = ProblemRuntime(problem)
        object.__setattr__(problem, "_runtime", rt)
    return rt
