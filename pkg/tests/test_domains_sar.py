"""Search-and-rescue generation, coverage utility, and sensor model."""

import numpy as np
import pytest

from aippms import AgentState, WorldBelief, bayes_update
from aippms.domains import (
    CoverageUtility,
    SarConfig,
    coverage_utility,
    generate_sar_problem,
)


class TestGeneration:
    def test_default_instance_shape(self, rng):
        problem, world = generate_sar_problem(SarConfig(), rng)
        g = problem.graph
        assert g.n_nodes == 30
        assert g.start == g.goal
        assert world.shape == (30,)
        assert problem.budget == pytest.approx(
            problem.params["tour_cost"] * (2 / 3)
        )
        assert problem.budget >= 0.0
        # resolved sensor costs scale with the budget
        assert problem.sensors[0].cost == pytest.approx(0.02 * problem.budget)
        assert problem.sensors[1].cost == pytest.approx(0.10 * problem.budget)

    def test_edges_follow_distance_rule(self, rng):
        problem, _ = generate_sar_problem(SarConfig(n_nodes=15), rng)
        g = problem.graph
        rho = problem.params["rho"]
        have = {(u, v) for u, v, _ in g.edges}
        pos = g.positions
        for u in range(g.n_nodes):
            for v in range(u + 1, g.n_nodes):
                d = float(np.linalg.norm(pos[u] - pos[v]))
                assert ((u, v) in have) == (d < rho)
                if (u, v) in have:
                    assert g.edge_weight(u, v) == pytest.approx(d)

    def test_state_frequencies_match_distribution(self, rng):
        """Empirical high-state rate over ~10^4 nodes, 3-sigma binomial band."""
        dist = (2 / 3, 1 / 6, 1 / 6)
        config = SarConfig(state_distribution=dist, grid_resolution=20)
        counts = np.zeros(3)
        total = 0
        while total < 10_000:
            _, world = generate_sar_problem(config, rng)
            for s in range(3):
                counts[s] += (world == s).sum()
            total += world.size
        for s, p in enumerate(dist):
            sigma = np.sqrt(total * p * (1 - p))
            assert abs(counts[s] - total * p) < 3 * sigma

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            SarConfig(state_distribution=(0.5, 0.2, 0.2))
        with pytest.raises(ValueError):
            SarConfig(coverage_radii=(0.1, 0.2, 0.05))


class TestCoverageUtility:
    def test_empty_set_is_zero(self):
        util = CoverageUtility(np.array([[0.5, 0.5]]), (0.25, 0.12, 0.05), 50)
        assert util.value(frozenset(), np.array([0])) == 0.0

    def test_disk_area_within_two_percent(self):
        # node at the center with radius 0.25 on a 100x100 grid ~ pi * 25^2
        util = CoverageUtility(np.array([[0.5, 0.5]]), (0.25, 0.12, 0.05), 100)
        tiles = util.value({0}, np.array([0]))
        expected = np.pi * 25.0**2
        assert abs(tiles - expected) / expected < 0.02

    def test_matches_direct_tile_enumeration(self, rng):
        """Oracle: loop over every tile center and test disk membership."""
        g = 40
        positions = rng.random((5, 2))
        radii = (0.25, 0.12, 0.05)
        util = CoverageUtility(positions, radii, g)
        world = rng.integers(0, 3, size=5)
        visited = {0, 2, 3}

        centers = (np.arange(g) + 0.5) / g
        count = 0
        for x in centers:
            for y in centers:
                covered = False
                for v in visited:
                    r = radii[world[v]]
                    if (x - positions[v, 0]) ** 2 + (y - positions[v, 1]) ** 2 <= r * r:
                        covered = True
                        break
                count += covered
        assert util.value(visited, world) == count

    def test_coincident_nodes_union_semantics(self):
        positions = np.array([[0.3, 0.3], [0.3, 0.3]])
        util = CoverageUtility(positions, (0.25, 0.12, 0.05), 60)
        world = np.array([1, 1])
        assert util.value({0, 1}, world) == util.value({0}, world)

    def test_monotone_and_submodular_over_1000_triples(self, rng):
        positions = rng.random((12, 2))
        util = CoverageUtility(positions, (0.25, 0.12, 0.05), 40)
        worlds = [rng.integers(0, 3, size=12) for _ in range(5)]
        for trial in range(1000):
            world = worlds[trial % len(worlds)]
            nodes = rng.permutation(12)
            cut_a = int(rng.integers(0, 5))
            cut_b = int(rng.integers(cut_a, 9))
            small = set(int(v) for v in nodes[:cut_a])
            large = small | set(int(v) for v in nodes[cut_a:cut_b])
            v = int(nodes[cut_b])
            gain_small = util.marginal_gain(v, small, world)
            gain_large = util.marginal_gain(v, large, world)
            assert gain_small >= gain_large - 1e-9  # diminishing returns
            assert gain_large >= -1e-9  # monotone

    def test_cursor_matches_value_diffs(self, rng):
        positions = rng.random((8, 2))
        util = CoverageUtility(positions, (0.25, 0.12, 0.05), 30)
        world = rng.integers(0, 3, size=8)
        visited = set()
        cursor = util.cursor(visited, world)
        for v in rng.permutation(8):
            v = int(v)
            direct = util.value(visited | {v}, world) - util.value(visited, world)
            assert cursor.marginal(v, int(world[v])) == pytest.approx(direct)
            assert cursor.add(v, int(world[v])) == pytest.approx(direct)
            visited.add(v)

    def test_functional_wrapper(self, rng):
        positions = rng.random((4, 2))
        world = rng.integers(0, 3, size=4)
        direct = coverage_utility({1, 2}, world, positions, (0.25, 0.12, 0.05), 30)
        util = CoverageUtility(positions, (0.25, 0.12, 0.05), 30)
        assert direct == util.value({1, 2}, world)


class TestSarSensing:
    def test_likelihoods_sum_to_one(self, rng):
        problem, _ = generate_sar_problem(SarConfig(n_nodes=10), rng)
        state = problem.initial_state()
        for spec in problem.sensors:
            lik = problem.sensor_model.likelihood_fn(state, spec.id)
            for node in range(10):
                for true in range(3):
                    total = sum(lik(node, obs, true) for obs in range(3))
                    assert total == pytest.approx(1.0)

    def test_perfect_sensor_at_distance_zero(self, rng):
        from aippms import DistanceDecaySensorModel, SensorSpec

        positions = np.zeros((2, 2))
        sensors = (SensorSpec("s", cost=0.1, max_fidelity=1.0, decay_rate=0.5),)
        model = DistanceDecaySensorModel(positions, 3, sensors)
        state = AgentState(0, frozenset({0}), 1.0)
        world = np.array([2, 1])
        for _ in range(25):
            obs = model.observe(world, state, "s", rng)
            assert obs.readings == ((1, 1),)

    def test_noise_rates_match_formula(self, rng):
        """A=0.8, r=0.5, d=1: correct 0.4, each wrong state 0.3 (3-sigma)."""
        from aippms import DistanceDecaySensorModel, SensorSpec

        positions = np.array([[0.0, 0.0], [1.0, 0.0]])
        sensors = (SensorSpec("s", cost=0.1, max_fidelity=0.8, decay_rate=0.5),)
        model = DistanceDecaySensorModel(positions, 3, sensors)
        state = AgentState(0, frozenset({0}), 1.0)
        world = np.array([0, 2])
        lik = model.likelihood_fn(state, "s")
        assert lik(1, 2, 2) == pytest.approx(0.4)
        assert lik(1, 0, 2) == pytest.approx(0.3)
        n = 10_000
        counts = np.zeros(3)
        for _ in range(n):
            obs = model.observe(world, state, "s", rng)
            counts[obs.readings[0][1]] += 1
        for y, p in ((2, 0.4), (0, 0.3), (1, 0.3)):
            sigma = np.sqrt(n * p * (1 - p))
            assert abs(counts[y] - n * p) < 3 * sigma

    def test_range_cutoff_limits_readings(self, rng):
        problem, world = generate_sar_problem(SarConfig(), rng)
        model = problem.sensor_model
        state = problem.initial_state()
        pos = problem.graph.positions
        for spec in problem.sensors:
            obs = model.observe(world, state, spec.id, rng)
            read = {n for n, _ in obs.readings}
            for node in range(problem.graph.n_nodes):
                d = float(np.linalg.norm(pos[node] - pos[state.current]))
                in_range = d <= spec.range_cutoff and node not in state.visited
                assert (node in read) == in_range

    def test_empirical_posterior_matches_analytic_bayes(self, rng):
        """Monte Carlo frequency of the true state given a fixed reading
        converges to the closed-form posterior bayes_update computes."""
        from aippms import DistanceDecaySensorModel, Observation, SensorSpec

        positions = np.array([[0.0, 0.0], [0.7, 0.0]])
        sensors = (SensorSpec("s", cost=0.1, max_fidelity=0.9, decay_rate=0.6),)
        model = DistanceDecaySensorModel(positions, 3, sensors)
        state = AgentState(0, frozenset({0}), 1.0)
        prior_row = np.array([0.5, 0.3, 0.2])
        belief = WorldBelief(("a", "b", "c"), np.vstack([[1, 0, 0], prior_row]))

        target_reading = 1
        n = 60_000
        joint = np.zeros(3)
        for _ in range(n):
            true = int(rng.choice(3, p=prior_row))
            world = np.array([0, true])
            obs = model.observe(world, state, "s", rng)
            if obs.readings[0][1] == target_reading:
                joint[true] += 1
        empirical = joint / joint.sum()

        post = bayes_update(
            belief,
            Observation(((1, target_reading),), None),
            model.likelihood_fn(state, "s"),
        )
        assert np.allclose(empirical, post.probs[1], atol=0.02)
