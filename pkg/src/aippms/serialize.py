"""Problem JSON schema for saving and replaying generated instances.

Layout::

    {
      "domain": "sar" | "isrs",
      "graph": {"nodes": [[id, x, y], ...],
                "edges": [[u, v, weight], ...],
                "start": id, "goal": id},
      "sensors": [{"id", "cost", "max_fidelity", "decay_rate",
                   "range_cutoff"}, ...],
      "budget": number,
      "prior": domain shorthand — {"high": p, "medium": p, "low": p} for the
               coverage domain, {"p_good": p} for the rover domain,
      "params": domain parameters (radii + grid, or rock/beacon node roles),
      "world": [state label per node]   # optional
    }
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .belief import WorldBelief, WorldState
from .graph import LocationGraph, SensorSpec
from .pomdp import Problem
from .sensing import DistanceDecaySensorModel
from .domains.isrs import BAD, GOOD, INERT, ISRS_STATES, RockUtility
from .domains.sar import SAR_STATES, CoverageUtility


def problem_to_dict(problem: Problem, world: WorldState | None = None) -> dict:
    graph = problem.graph
    out = {
        "domain": problem.domain,
        "graph": {
            "nodes": [
                [i, float(x), float(y)]
                for i, (x, y) in enumerate(graph.positions)
            ],
            "edges": [[u, v, w] for u, v, w in graph.edges],
            "start": graph.start,
            "goal": graph.goal,
        },
        "sensors": [
            {
                "id": s.id,
                "cost": s.cost,
                "max_fidelity": s.max_fidelity,
                "decay_rate": s.decay_rate,
                "range_cutoff": s.range_cutoff,
            }
            for s in problem.sensors
        ],
        "budget": problem.budget,
        "params": dict(problem.params),
    }
    if problem.domain == "sar":
        row = problem.prior.probs[0]
        out["prior"] = {s: float(p) for s, p in zip(SAR_STATES, row)}
    elif problem.domain == "isrs":
        out["prior"] = {"p_good": problem.params["p_good"]}
        out["params"]["rocks"] = [
            int(v) for v in np.flatnonzero(problem.utility.is_rock)
        ]
        out["params"]["beacons"] = sorted(int(v) for v in problem.sense_sites)
        out["params"]["origin"] = graph.start
    else:
        raise ValueError(f"cannot serialize domain {problem.domain!r}")
    if world is not None:
        states = SAR_STATES if problem.domain == "sar" else ISRS_STATES
        out["world"] = [states[int(s)] for s in np.asarray(world)]
    return out


def problem_from_dict(raw: dict) -> tuple[Problem, WorldState | None]:
    domain = raw["domain"]
    g = raw["graph"]
    nodes = sorted(g["nodes"])
    if [n[0] for n in nodes] != list(range(len(nodes))):
        raise ValueError("node ids must be contiguous from 0")
    positions = np.array([[x, y] for _, x, y in nodes])
    graph = LocationGraph(
        positions,
        [(u, v, w) for u, v, w in g["edges"]],
        start=g["start"],
        goal=g["goal"],
    )
    sensors = tuple(SensorSpec(**s) for s in raw["sensors"])
    params = raw["params"]

    if domain == "sar":
        states = SAR_STATES
        prior_row = [raw["prior"][s] for s in SAR_STATES]
        prior = WorldBelief.from_shared(SAR_STATES, graph.n_nodes, prior_row)
        utility = CoverageUtility(
            positions, params["coverage_radii"], params["grid_resolution"]
        )
        model = DistanceDecaySensorModel(positions, len(SAR_STATES), sensors)
        problem = Problem(
            graph=graph, sensors=sensors, utility=utility, prior=prior,
            budget=raw["budget"], domain="sar", sensor_model=model,
            params=dict(params),
        )
    elif domain == "isrs":
        states = ISRS_STATES
        n = graph.n_nodes
        is_rock = np.zeros(n, dtype=bool)
        is_rock[params["rocks"]] = True
        beacons = frozenset(params["beacons"])
        p_good = raw["prior"]["p_good"]
        rows = np.zeros((n, len(ISRS_STATES)))
        rows[:, INERT] = 1.0
        rows[is_rock] = (p_good, 1.0 - p_good, 0.0)
        prior = WorldBelief(ISRS_STATES, rows)
        post_visit = np.full(n, -1, dtype=np.int64)
        post_visit[is_rock] = BAD
        model = DistanceDecaySensorModel(
            positions, len(ISRS_STATES), sensors,
            readable=is_rock, sites=beacons, reading_states=2,
        )
        problem = Problem(
            graph=graph, sensors=sensors,
            utility=RockUtility(is_rock, params["rock_reward"]),
            prior=prior, budget=raw["budget"], domain="isrs",
            sensor_model=model, sense_sites=beacons,
            post_visit_states=post_visit, params=dict(params),
        )
    else:
        raise ValueError(f"cannot load domain {domain!r}")

    world = None
    if "world" in raw:
        world = np.array([states.index(s) for s in raw["world"]], dtype=np.int64)
    return problem, world


def save_problem(
    path: str | Path, problem: Problem, world: WorldState | None = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem, world), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_problem(path: str | Path) -> tuple[Problem, WorldState | None]:
    with open(path, encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))
