"""Seeded, reproducible benchmark runner.

An experiment file names a domain, a list of instance settings, a list of
policies, a trial count, and a master seed. Per-trial seeds derive from
(master seed, setting index, trial index), so every policy sees the same
generated instance and hidden world for a given trial, and adding or removing
policies never perturbs instance generation. Per-trial rows go to
``trials.csv`` (byte-stable across reruns), wall-clock to ``timings.csv``
(inherently not), aggregates and all resolved parameters to ``results.json``,
and a settings-by-policies summary table to stdout.

Command line::

    aippms-bench run --config experiment.json --out results/ [--seed N]
                     [--policies id,id] [--trials N] [--parallel N] [--traces]
    aippms-bench verify --out results/
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .belief import WorldBelief, WorldState, bayes_update, collapse_on_visit
from .errors import InfeasibleInstanceError
from .graph import Move, Sense
from .naive import NaiveConfig, naive_action
from .pomcp import PlannerConfig, plan
from .pomdp import Problem, initial_outcome, step
from .domains.isrs import IsrsConfig, generate_isrs_problem
from .domains.sar import SarConfig, SarSensorConfig, generate_sar_problem
from .graph import SensorSpec

CSV_COLUMNS = (
    "setting_id", "policy", "seed", "utility",
    "energy_spent", "reached_goal", "steps",
)


@dataclass(frozen=True)
class PolicySpec:
    """One benchmarked policy: a tree-search planner or the baseline."""

    id: str
    kind: str  # "pomcp" | "naive"
    planner: PlannerConfig | None = None
    naive: NaiveConfig | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("pomcp", "naive"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "pomcp" and self.planner is None:
            object.__setattr__(self, "planner", PlannerConfig())
        if self.kind == "naive" and self.naive is None:
            object.__setattr__(self, "naive", NaiveConfig())

    def decide(self, problem, state, belief, rng):
        if self.kind == "pomcp":
            return plan(problem, state, belief, self.planner, rng)
        return naive_action(problem, state, belief, self.naive, rng)

    def to_dict(self) -> dict:
        out = {"id": self.id, "kind": self.kind}
        if self.kind == "pomcp":
            out["planner"] = asdict(self.planner)
        else:
            out["naive"] = asdict(self.naive)
        return out

    @staticmethod
    def from_dict(raw: dict) -> "PolicySpec":
        kind = raw["kind"]
        planner = naive = None
        if kind == "pomcp":
            params = dict(raw.get("planner", {}))
            params.pop("max_depth", None)
            planner = PlannerConfig(**params)
        elif kind == "naive":
            naive = NaiveConfig(**raw.get("naive", {}))
        return PolicySpec(id=raw["id"], kind=kind, planner=planner, naive=naive)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description, loadable from JSON."""

    domain: str
    settings: tuple[dict, ...]
    policies: tuple[PolicySpec, ...]
    trials: int = 50
    seed: int = 0
    base: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.domain not in ("sar", "isrs"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.policies:
            raise ValueError("at least one policy is required")
        if not self.settings:
            raise ValueError("at least one setting is required")
        ids = [s["id"] for s in self.settings]
        if len(ids) != len(set(ids)):
            raise ValueError("setting ids must be unique")
        pids = [p.id for p in self.policies]
        if len(pids) != len(set(pids)):
            raise ValueError("policy ids must be unique")

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "base": self.base,
            "settings": list(self.settings),
            "policies": [p.to_dict() for p in self.policies],
            "trials": self.trials,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        return ExperimentConfig(
            domain=raw["domain"],
            settings=tuple(raw["settings"]),
            policies=tuple(PolicySpec.from_dict(p) for p in raw["policies"]),
            trials=raw.get("trials", 50),
            seed=raw.get("seed", 0),
            base=raw.get("base", {}),
        )

    @staticmethod
    def from_file(path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return ExperimentConfig.from_dict(json.load(fh))


def make_problem(
    domain: str, params: dict, rng: np.random.Generator
) -> tuple[Problem, WorldState]:
    """Generate one instance for a merged base+setting parameter dict."""
    params = {k: v for k, v in params.items() if k != "id"}
    if domain == "sar":
        if "sensors" in params:
            params["sensors"] = tuple(
                SarSensorConfig(**s) for s in params["sensors"]
            )
        for key in ("radius_range", "state_distribution", "coverage_radii"):
            if key in params:
                params[key] = tuple(params[key])
        return generate_sar_problem(SarConfig(**params), rng)
    if "sensors" in params:
        params["sensors"] = tuple(SensorSpec(**s) for s in params["sensors"])
    return generate_isrs_problem(IsrsConfig(**params), rng)


@dataclass
class TrialResult:
    """Outcome of one policy episode on one generated instance."""

    setting_id: str
    policy_id: str
    seed: int
    utility: float
    energy_spent: float
    reached_goal: bool
    steps: int
    mean_plan_seconds: float
    trace: list = field(default_factory=list, repr=False)


def run_trial(
    problem: Problem,
    world: WorldState,
    policy: PolicySpec,
    rng: np.random.Generator,
    setting_id: str = "",
    seed: int = 0,
    keep_trace: bool = True,
) -> TrialResult:
    """Play one full episode: plan, step, update belief, until terminal.

    The trajectory opens with the synthetic reveal of the start node, so the
    summed rewards equal the utility of the final visited set exactly.
    """
    ret = problem.costs.cost(problem.graph.start, problem.graph.goal)
    if problem.budget < ret:
        raise InfeasibleInstanceError(
            f"budget {problem.budget} below start-to-goal cost {ret}"
        )
    state = problem.initial_state()
    belief = problem.initial_belief(world)
    outcomes = [initial_outcome(problem, world)]
    plan_seconds: list[float] = []

    while problem.feasible_actions(state):
        t0 = time.perf_counter()
        action = policy.decide(problem, state, belief, rng)
        plan_seconds.append(time.perf_counter() - t0)
        outcome = step(problem, state, world, action, rng)
        if isinstance(action, Move):
            belief = collapse_on_visit(
                belief,
                action.target,
                problem.post_visit_state(action.target, int(world[action.target])),
            )
        else:
            belief = bayes_update(
                belief,
                outcome.observation,
                problem.sensor_model.likelihood_fn(state, action.sensor),
            )
        state = outcome.next_state
        outcomes.append(outcome)

    trace = [_trace_entry(o) for o in outcomes] if keep_trace else []
    return TrialResult(
        setting_id=setting_id,
        policy_id=policy.id,
        seed=seed,
        utility=float(sum(o.reward for o in outcomes)),
        energy_spent=float(problem.budget - state.remaining_budget),
        reached_goal=state.current == problem.graph.goal,
        steps=len(outcomes) - 1,
        mean_plan_seconds=float(np.mean(plan_seconds)) if plan_seconds else 0.0,
        trace=trace,
    )


def _trace_entry(outcome) -> dict:
    action = outcome.observation.action
    if action is None:
        tag = None
    elif isinstance(action, Move):
        tag = f"move:{action.target}"
    else:
        tag = f"sense:{action.sensor}"
    return {
        "action": tag,
        "readings": [[int(n), int(s)] for n, s in outcome.observation.readings],
        "reward": outcome.reward,
        "cost": outcome.cost,
    }


def trial_seed(master: int, setting_idx: int, trial_idx: int) -> int:
    """Stable per-trial seed; independent of which policies are configured."""
    ss = np.random.SeedSequence((master, setting_idx, trial_idx))
    return int(ss.generate_state(1, np.uint64)[0])


def _instance_rng(master: int, setting_idx: int, trial_idx: int):
    return np.random.default_rng(
        np.random.SeedSequence((master, setting_idx, trial_idx))
    )

def _policy_rng(master: int, setting_idx: int, trial_idx: int, policy_idx: int):
    return np.random.default_rng(
        np.random.SeedSequence((master, setting_idx, trial_idx, 7919 + policy_idx))
    )


def _run_task(args: tuple) -> tuple:
    config_dict, setting_idx, trial_idx, policy_idx, keep_trace = args
    config = ExperimentConfig.from_dict(config_dict)
    setting = config.settings[setting_idx]
    policy = config.policies[policy_idx]
    params = {**config.base, **setting}
    try:
        problem, world = make_problem(
            config.domain, params, _instance_rng(config.seed, setting_idx, trial_idx)
        )
        result = run_trial(
            problem,
            world,
            policy,
            _policy_rng(config.seed, setting_idx, trial_idx, policy_idx),
            setting_id=setting["id"],
            seed=trial_seed(config.seed, setting_idx, trial_idx),
            keep_trace=keep_trace,
        )
        if result.energy_spent > problem.budget or not result.reached_goal:
            raise AssertionError("feasibility guarantee violated")
        return ("ok", result)
    except Exception as exc:  # recorded per-trial; the suite continues
        return (
            "error",
            {
                "setting_id": setting["id"],
                "policy": policy.id,
                "trial": trial_idx,
                "error": repr(exc),
            },
        )


@dataclass
class SuiteResult:
    rows: list[TrialResult]
    aggregates: dict
    errors: list[dict]
    config: ExperimentConfig


def run_suite(
    config: ExperimentConfig,
    out_dir: str | Path,
    parallel: int = 1,
    keep_traces: bool = False,
) -> SuiteResult:
    """Run every (setting, policy, trial) combination and write outputs.

    Trials are independent and may run in parallel; output ordering is by
    (setting, policy, trial index) regardless. Per-trial errors are recorded
    in ``results.json`` and leave the other trials untouched.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_dict = config.to_dict()

    tasks = [
        (config_dict, si, ti, pi, keep_traces)
        for si in range(len(config.settings))
        for pi in range(len(config.policies))
        for ti in range(config.trials)
    ]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        outcomes = [_run_task(t) for t in tasks]

    rows: list[TrialResult] = []
    errors: list[dict] = []
    for status, payload in outcomes:
        if status == "ok":
            rows.append(payload)
        else:
            errors.append(payload)

    aggregates = aggregate(rows)
    _write_csv(out_dir / "trials.csv", rows)
    _write_timings(out_dir / "timings.csv", rows)
    if keep_traces:
        _write_traces(out_dir / "traces.jsonl", rows)
    results = {
        "config": config_dict,
        "aggregates": aggregates,
        "errors": errors,
    }
    with open(out_dir / "results.json", "w", encoding="utf-8") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return SuiteResult(rows=rows, aggregates=aggregates, errors=errors, config=config)


def aggregate(rows: list[TrialResult]) -> dict:
    """Mean utility and standard error per (setting, policy)."""
    groups: dict[tuple[str, str], list[float]] = {}
    order: list[tuple[str, str]] = []
    for row in rows:
        key = (row.setting_id, row.policy_id)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row.utility)
    out: dict = {}
    for setting_id, policy_id in order:
        values = np.array(groups[(setting_id, policy_id)])
        mean = float(values.mean())
        sem = (
            float(values.std(ddof=1) / np.sqrt(values.size))
            if values.size > 1
            else 0.0
        )
        out.setdefault(setting_id, {})[policy_id] = {
            "mean": mean,
            "sem": sem,
            "trials": int(values.size),
            "sem_exceeds_tenth_of_mean": bool(sem > 0.1 * abs(mean)),
        }
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, rows: list[TrialResult]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.setting_id, r.policy_id, r.seed, _fmt(r.utility),
                    _fmt(r.energy_spent), _fmt(r.reached_goal), r.steps,
                ]
            )


def _write_timings(path: Path, rows: list[TrialResult]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["setting_id", "policy", "seed", "mean_plan_seconds"])
        for r in rows:
            writer.writerow(
                [r.setting_id, r.policy_id, r.seed, _fmt(r.mean_plan_seconds)]
            )


def _write_traces(path: Path, rows: list[TrialResult]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(
                json.dumps(
                    {
                        "setting_id": r.setting_id,
                        "policy": r.policy_id,
                        "seed": r.seed,
                        "trace": r.trace,
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")


def summary_table(aggregates: dict, policies: list[str]) -> str:
    """Settings-as-rows, policies-as-columns table; '*' flags SEM > 10% of mean."""
    header = ["setting"] + list(policies)
    rows = [header]
    for setting_id, per_policy in aggregates.items():
        row = [setting_id]
        for pid in policies:
            cell = per_policy.get(pid)
            if cell is None:
                row.append("-")
                continue
            flag = "*" if cell["sem_exceeds_tenth_of_mean"] else ""
            row.append(f"{cell['mean']:.1f} ± {cell['sem']:.1f}{flag}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)) for r in rows
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def recompute_from_csv(out_dir: str | Path) -> dict:
    """Re-derive the aggregates from the per-trial CSV (the source of truth)."""
    path = Path(out_dir) / "trials.csv"
    groups: dict[tuple[str, str], list[float]] = {}
    order: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for record in csv.DictReader(fh):
            key = (record["setting_id"], record["policy"])
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(float(record["utility"]))
    out: dict = {}
    for setting_id, policy_id in order:
        values = np.array(groups[(setting_id, policy_id)])
        mean = float(values.mean())
        sem = (
            float(values.std(ddof=1) / np.sqrt(values.size))
            if values.size > 1
            else 0.0
        )
        out.setdefault(setting_id, {})[policy_id] = {
            "mean": mean,
            "sem": sem,
            "trials": int(values.size),
        }
    return out


def verify_output(out_dir: str | Path, tolerance: float = 1e-9) -> list[str]:
    """Check the stored aggregates against the per-trial CSV; [] means clean."""
    out_dir = Path(out_dir)
    with open(out_dir / "results.json", encoding="utf-8") as fh:
        stored = json.load(fh)["aggregates"]
    fresh = recompute_from_csv(out_dir)
    problems = []
    for setting_id, per_policy in fresh.items():
        for policy_id, cell in per_policy.items():
            kept = stored.get(setting_id, {}).get(policy_id)
            if kept is None:
                problems.append(f"{setting_id}/{policy_id}: missing from results.json")
                continue
            for key in ("mean", "sem"):
                if abs(kept[key] - cell[key]) > tolerance:
                    problems.append(
                        f"{setting_id}/{policy_id}: {key} mismatch "
                        f"(stored {kept[key]}, recomputed {cell[key]})"
                    )
            if kept["trials"] != cell["trials"]:
                problems.append(f"{setting_id}/{policy_id}: trial count mismatch")
    for setting_id, per_policy in stored.items():
        for policy_id in per_policy:
            if policy_id not in fresh.get(setting_id, {}):
                problems.append(f"{setting_id}/{policy_id}: missing from trials.csv")
    return problems


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="aippms-bench", description="Run or verify benchmark suites."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("--config", required=True, help="experiment JSON file")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override master seed")
    run_p.add_argument(
        "--policies", default=None, help="comma-separated policy ids to run"
    )
    run_p.add_argument("--trials", type=int, default=None, help="override trials")
    run_p.add_argument("--parallel", type=int, default=1, help="worker processes")
    run_p.add_argument(
        "--traces", action="store_true", help="write per-trial traces.jsonl"
    )

    verify_p = sub.add_parser("verify", help="recompute aggregates from the CSV")
    verify_p.add_argument("--out", required=True, help="suite output directory")

    args = parser.parse_args(argv)
    if args.command == "verify":
        problems = verify_output(args.out)
        for line in problems:
            print(f"MISMATCH {line}")
        if not problems:
            print("aggregates match the per-trial CSV")
        return 1 if problems else 0

    config = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.policies is not None:
        wanted = {p.strip() for p in args.policies.split(",")}
        unknown = wanted - {p.id for p in config.policies}
        if unknown:
            print(f"unknown policy ids: {sorted(unknown)}", file=sys.stderr)
            return 2
        overrides["policies"] = tuple(
            p for p in config.policies if p.id in wanted
        )
    if overrides:
        config = ExperimentConfig(
            domain=config.domain,
            settings=config.settings,
            policies=overrides.get("policies", config.policies),
            trials=overrides.get("trials", config.trials),
            seed=overrides.get("seed", config.seed),
            base=config.base,
        )

    suite = run_suite(
        config, args.out, parallel=args.parallel, keep_traces=args.traces
    )
    print(summary_table(suite.aggregates, [p.id for p in config.policies]))
    if suite.errors:
        print(f"{len(suite.errors)} trial(s) failed; see results.json")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
