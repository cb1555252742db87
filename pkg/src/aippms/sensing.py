"""Distance-decay sensor observation model shared by the benchmark domains.

One sensor firing produces a batch of readings, one per readable unvisited
node within the sensor's range. A reading of a node at distance d matches the
true state with probability ``max_fidelity * decay_rate ** d``; the remaining
mass is spread uniformly over the other states (which, for a binary alphabet,
means the wrong state absorbs it all). Likelihoods therefore sum to one over
the alphabet for every sensor and distance.
"""

from __future__ import annotations

import numpy as np

from .belief import LikelihoodFn, Observation, WorldState
from .errors import InvalidActionError
from .graph import AgentState, Sense, SensorSpec


class DistanceDecaySensorModel:
    """Concrete :class:`~aippms.pomdp.SensorModel` based on node distances.

    ``readable`` masks which nodes can ever be read (e.g. only rocks in a
    rover domain); ``sites`` optionally restricts where sensing is physically
    possible and makes :meth:`observe` reject other locations. Distances are
    Euclidean between stored positions.

    ``reading_states`` supports alphabets whose tail states are not sensable:
    readings and their error mass stay within the first ``reading_states``
    alphabet entries (readable nodes must only ever hold those states). By
    default the whole alphabet is sensable.
    """

    def __init__(
        self,
        positions: np.ndarray,
        n_states: int,
        sensors: tuple[SensorSpec, ...],
        readable: np.ndarray | None = None,
        sites: frozenset[int] | None = None,
        reading_states: int | None = None,
    ):
        positions = np.asarray(positions, dtype=np.float64)
        n = positions.shape[0]
        self.positions = positions
        self.n_states = int(n_states)
        self.reading_states = int(reading_states or n_states)
        if not 1 < self.reading_states <= self.n_states:
            raise ValueError("reading_states must be in [2, n_states]")
        self.sites = sites
        self._specs = {s.id: s for s in sensors}
        if readable is None:
            readable = np.ones(n, dtype=bool)
        self.readable = np.asarray(readable, dtype=bool)

        # Pairwise distances once; per-sensor correct-read probabilities and
        # in-range masks are then pure lookups.
        diff = positions[:, None, :] - positions[None, :, :]
        self.distances = np.sqrt((diff**2).sum(axis=2))
        self._correct: dict[str, np.ndarray] = {}
        self._in_range: dict[str, np.ndarray] = {}
        for spec in sensors:
            self._correct[spec.id] = spec.max_fidelity * np.power(
                spec.decay_rate, self.distances
            )
            if spec.range_cutoff is None:
                in_range = np.ones_like(self.distances, dtype=bool)
            else:
                in_range = self.distances <= spec.range_cutoff
            self._in_range[spec.id] = in_range & self.readable[None, :]

    def spec(self, sensor: str) -> SensorSpec:
        try:
            return self._specs[sensor]
        except KeyError:
            raise InvalidActionError(f"unknown sensor {sensor!r}") from None

    def targets(self, agent_node: int, sensor: str) -> np.ndarray:
        """Node ids a firing from ``agent_node`` could read (before the
        unvisited filter), sorted ascending."""
        self.spec(sensor)
        return np.flatnonzero(self._in_range[sensor][agent_node])

    def correct_probs(self, agent_node: int, sensor: str, nodes: np.ndarray):
        return self._correct[sensor][agent_node, nodes]

    def observe(
        self,
        world: WorldState,
        state: AgentState,
        sensor: str,
        rng: np.random.Generator,
    ) -> Observation:
        self.spec(sensor)
        if self.sites is not None and state.current not in self.sites:
            raise InvalidActionError(
                f"sensing is not possible at node {state.current}"
            )
        targets = self.targets(state.current, sensor)
        targets = targets[[t not in state.visited for t in targets]]
        action = Sense(sensor)
        if targets.size == 0:
            return Observation(readings=(), action=action)
        q = self._correct[sensor][state.current, targets]
        true = np.asarray(world)[targets]
        observed = sample_readings(true, q, self.reading_states, rng)
        readings = tuple(
            (int(node), int(y)) for node, y in zip(targets, observed)
        )
        return Observation(readings=readings, action=action)

    def likelihood_fn(self, state: AgentState, sensor: str) -> LikelihoodFn:
        """Per-reading likelihood matching :meth:`observe`'s noise model."""
        self.spec(sensor)
        correct_row = self._correct[sensor][state.current]
        rs = self.reading_states

        def likelihood(node: int, observed: int, true: int) -> float:
            if true >= rs:
                return 0.0
            q = correct_row[node]
            if observed == true:
                return float(q)
            return float((1.0 - q) / (rs - 1))

        return likelihood


def sample_readings(
    true: np.ndarray, correct: np.ndarray, n_states: int, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized draw of noisy readings for a batch of nodes.

    Each reading equals its true state with the given probability; otherwise a
    uniformly chosen different state (the flip, when the alphabet is binary).
    """
    m = true.shape[0]
    hit = rng.random(m) < correct
    offsets = rng.integers(1, n_states, size=m) if n_states > 1 else np.zeros(m, int)
    wrong = (true + offsets) % n_states
    return np.where(hit, true, wrong)
