"""Belief updates against hand Bayes and a brute-force joint oracle."""

import itertools

import numpy as np
import pytest

from aippms import (
    AgentState,
    DistanceDecaySensorModel,
    InconsistentObservationError,
    Observation,
    Sense,
    SensorSpec,
    WorldBelief,
    bayes_update,
    collapse_on_visit,
    expected_marginal_utility,
    info_gain_estimate,
    sample_world,
)

from conftest import TableUtility


def uniform_belief(n_nodes, states=("a", "b", "c")):
    k = len(states)
    return WorldBelief(states, np.full((n_nodes, k), 1.0 / k))


def fidelity_likelihood(f, k=3):
    """Correct with probability f, uniform over the other k-1 states."""

    def likelihood(node, observed, true):
        return f if observed == true else (1.0 - f) / (k - 1)

    return likelihood


class TestBayesUpdate:
    def test_perfect_reading_collapses(self):
        belief = uniform_belief(2)
        obs = Observation(readings=((0, 1),), action=None)
        post = bayes_update(belief, obs, fidelity_likelihood(1.0))
        assert np.allclose(post.probs[0], [0.0, 1.0, 0.0])
        assert np.allclose(post.probs[1], belief.probs[1])

    def test_posterior_equals_fidelity_from_uniform_prior(self):
        # (1/3 f) / (1/3 f + 2/3 (1-f)/2) = f
        for f in (0.55, 0.8, 0.95):
            belief = uniform_belief(1)
            obs = Observation(readings=((0, 2),), action=None)
            post = bayes_update(belief, obs, fidelity_likelihood(f))
            assert post.probs[0, 2] == pytest.approx(f)

    def test_uninformative_likelihood_is_identity(self):
        belief = WorldBelief(("a", "b", "c"), np.array([[0.5, 0.3, 0.2]]))
        obs = Observation(readings=((0, 0),), action=None)
        post = bayes_update(belief, obs, fidelity_likelihood(1.0 / 3.0))
        assert np.allclose(post.probs, belief.probs)

    def test_inconsistent_observation_raises_with_node(self):
        belief = WorldBelief(("a", "b"), np.array([[1.0, 0.0], [0.5, 0.5]]))

        def perfect(node, observed, true):
            return 1.0 if observed == true else 0.0

        obs = Observation(readings=((0, 1),), action=None)
        with pytest.raises(InconsistentObservationError, match="node 0"):
            bayes_update(belief, obs, perfect)

    def test_original_belief_not_mutated(self):
        belief = uniform_belief(2)
        before = belief.probs.copy()
        obs = Observation(readings=((0, 0),), action=None)
        bayes_update(belief, obs, fidelity_likelihood(0.9))
        assert np.array_equal(belief.probs, before)

    def test_reading_order_within_observation_is_irrelevant(self, rng):
        for _ in range(20):
            probs = rng.dirichlet(np.ones(3), size=4)
            belief = WorldBelief(("a", "b", "c"), probs)
            readings = [(i, int(rng.integers(3))) for i in range(4)]
            lik = fidelity_likelihood(float(rng.uniform(0.4, 0.95)))
            fwd = bayes_update(
                belief, Observation(tuple(readings), None), lik
            )
            rev = bayes_update(
                belief, Observation(tuple(reversed(readings)), None), lik
            )
            assert np.allclose(fwd.probs, rev.probs, atol=1e-12)

    def test_normalization_and_nonnegativity_preserved(self, rng):
        for _ in range(50):
            n, k = int(rng.integers(1, 5)), 3
            belief = WorldBelief(("a", "b", "c"), rng.dirichlet(np.ones(k), size=n))
            node = int(rng.integers(n))
            obs = Observation(((node, int(rng.integers(k))),), None)
            post = bayes_update(
                belief, obs, fidelity_likelihood(float(rng.uniform(0.34, 1.0)))
            )
            assert (post.probs >= 0).all()
            assert np.allclose(post.probs.sum(axis=1), 1.0, atol=1e-9)

    def test_matches_joint_enumeration_oracle(self, rng):
        """Factored update == exact joint Bayes on <=3 nodes x 3 states.

        The oracle enumerates every complete world, weights it by the product
        prior times the product likelihood of all readings, normalizes the
        joint, and marginalizes per node.
        """
        states = ("a", "b", "c")
        k = len(states)
        for _ in range(25):
            n = int(rng.integers(1, 4))
            prior = rng.dirichlet(np.ones(k), size=n)
            belief = WorldBelief(states, prior)
            n_read = int(rng.integers(1, n + 1))
            nodes = rng.choice(n, size=n_read, replace=False)
            readings = tuple((int(i), int(rng.integers(k))) for i in nodes)
            f = float(rng.uniform(0.34, 0.99))
            lik = fidelity_likelihood(f)

            post = bayes_update(belief, Observation(readings, None), lik)

            joint = {}
            for world in itertools.product(range(k), repeat=n):
                weight = float(np.prod([prior[i, world[i]] for i in range(n)]))
                for node, observed in readings:
                    weight *= lik(node, observed, world[node])
                joint[world] = weight
            total = sum(joint.values())
            marginals = np.zeros((n, k))
            for world, weight in joint.items():
                for i in range(n):
                    marginals[i, world[i]] += weight / total

            assert np.allclose(post.probs, marginals, atol=1e-9)


class TestCollapseOnVisit:
    def test_collapse_and_idempotence(self):
        belief = uniform_belief(3)
        once = collapse_on_visit(belief, 1, 2)
        assert np.allclose(once.probs[1], [0.0, 0.0, 1.0])
        assert np.allclose(once.probs[0], belief.probs[0])
        twice = collapse_on_visit(once, 1, 2)
        assert np.allclose(twice.probs, once.probs)


class TestSampleWorld:
    def test_point_masses_give_unique_world(self, rng):
        probs = np.array([[1.0, 0, 0], [0, 0, 1.0], [0, 1.0, 0]])
        belief = WorldBelief(("a", "b", "c"), probs)
        for _ in range(10):
            assert np.array_equal(sample_world(belief, rng), [0, 2, 1])

    def test_frequencies_match_within_3_sigma(self, rng):
        row = np.array([0.2, 0.5, 0.3])
        belief = WorldBelief(("a", "b", "c"), row[None, :])
        n = 100_000
        draws = np.array([sample_world(belief, rng)[0] for _ in range(n)])
        for state, p in enumerate(row):
            observed = (draws == state).sum()
            sigma = np.sqrt(n * p * (1 - p))
            assert abs(observed - n * p) < 3 * sigma

    def test_roundtrip_update_never_inconsistent(self, rng):
        """Observations generated from a sampled world always update cleanly."""
        positions = np.array([[0.0, 0], [1.0, 0], [0.0, 1], [1.0, 1]])
        sensors = (SensorSpec("s", cost=0.1, max_fidelity=0.9, decay_rate=0.7),)
        model = DistanceDecaySensorModel(positions, 3, sensors)
        for _ in range(100):
            belief = WorldBelief(("a", "b", "c"), rng.dirichlet(np.ones(3), size=4))
            world = sample_world(belief, rng)
            state = AgentState(0, frozenset({0}), 10.0)
            obs = model.observe(world, state, "s", rng)
            bayes_update(belief, obs, model.likelihood_fn(state, "s"))


class TestExpectedMarginalUtility:
    def test_visited_node_is_zero(self):
        belief = WorldBelief(("good", "bad"), np.array([[0.9, 0.1]]))
        utility = TableUtility([10.0])
        assert expected_marginal_utility(belief, 0, frozenset({0}), utility) == 0.0

    def test_modular_reward_scales_with_probability(self):
        # p(good) = 0.75 at 10 per good node
        belief = WorldBelief(("good", "bad"), np.array([[0.75, 0.25], [0.5, 0.5]]))
        utility = TableUtility([10.0, 10.0])
        assert expected_marginal_utility(
            belief, 0, frozenset(), utility
        ) == pytest.approx(7.5)

    def test_point_mass_equals_deterministic_gain(self):
        belief = WorldBelief(("good", "bad"), np.array([[0.0, 1.0], [1.0, 0.0]]))
        utility = TableUtility([3.0, 5.0])
        assert expected_marginal_utility(belief, 0, frozenset(), utility) == 0.0
        assert expected_marginal_utility(belief, 1, frozenset(), utility) == 5.0


def one_node_sensor_setup(fidelity):
    """One hidden uniform binary node, read by the agent from distance zero.

    The agent sits at a co-located second node so the hidden node stays
    unvisited (readings only cover unvisited nodes).
    """
    sensors = (
        SensorSpec("s", cost=0.1, max_fidelity=fidelity, decay_rate=1.0),
    )
    positions = np.array([[0.0, 0.0], [0.0, 0.0]])
    model = DistanceDecaySensorModel(
        positions, 2, sensors, readable=np.array([True, False])
    )
    belief = WorldBelief(("good", "bad"), np.array([[0.5, 0.5], [1.0, 0.0]]))
    state = AgentState(1, frozenset({1}), 10.0)
    return belief, state, model


class TestInfoGainEstimate:
    def test_point_mass_belief_gains_nothing(self, rng):
        belief = WorldBelief(("good", "bad"), np.array([[1.0, 0.0], [0.0, 1.0]]))
        positions = np.zeros((2, 2))
        sensors = (SensorSpec("s", cost=0.1, max_fidelity=1.0, decay_rate=1.0),)
        model = DistanceDecaySensorModel(positions, 2, sensors)
        state = AgentState(0, frozenset({0}), 10.0)
        assert info_gain_estimate(
            belief, Sense("s"), state, model, 5, rng
        ) == pytest.approx(0.0)

    def test_perfect_binary_sensor_gains_half(self, rng):
        # uniform binary prior: mode 0.5 -> 1.0 on either outcome
        belief, state, model = one_node_sensor_setup(1.0)
        gain = info_gain_estimate(belief, Sense("s"), state, model, 8, rng)
        assert gain == pytest.approx(0.5)

    def test_fidelity_08_gains_03(self, rng):
        # either outcome's posterior mode is 0.8; gain 0.8 - 0.5 exactly,
        # independent of the sample count
        belief, state, model = one_node_sensor_setup(0.8)
        gain = info_gain_estimate(belief, Sense("s"), state, model, 3, rng)
        assert gain == pytest.approx(0.3)

    def test_uninformative_sensor_gains_exactly_zero(self, rng):
        belief, state, model = one_node_sensor_setup(0.5)
        gain = info_gain_estimate(belief, Sense("s"), state, model, 4, rng)
        assert gain == pytest.approx(0.0)

    def test_zero_samples_rejected(self, rng):
        belief, state, model = one_node_sensor_setup(0.8)
        with pytest.raises(ValueError):
            info_gain_estimate(belief, Sense("s"), state, model, 0, rng)
