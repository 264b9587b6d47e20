"""Trial orchestration: closed-loop simulation, sweeps, metrics, and replay.

Each trial runs the receding-horizon loop: plan an epoch, execute the first
controls, move targets, take range observations for every robot-target
pair, and commit the filter updates. All randomness derives from
(master seed, trial, epoch/step, entity, purpose) streams, so a (config,
seed) pair reproduces bit-identically.
"""

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import seeding
from .coordination import (
    CoordinationMethod,
    PlanningSetup,
    PlanResult,
    build_empty_graph,
    build_graph_for_method,
    run_distributed_plan,
    run_random,
)
from .mcts import Budget
from .objective import ObjectiveContext, RolloutEvaluator
from .records import SubproblemRecord, build_record
from .sensing import (
    DegenerateUpdateError,
    HistogramFilter,
    RangeSensorModel,
    sample_observation,
)
from .world import Grid, MotionKernel, WorldState, grid_side, step_robot, step_target

METRICS_SCHEMA_VERSION = 1
METRICS_COLUMNS = (
    "schema_version",
    "kind",
    "method",
    "n_r",
    "n_d",
    "trial",
    "subproblem",
    "entropy",
    "objective",
    "normalized_objective",
    "redundancy_per_robot",
    "objective_per_robot",
    "messages_per_epoch",
    "sequential_steps",
    "parallel_wall_time",
    "total_wall_time",
)

SPARSE_FILTER_TEAM_SIZE = 16  # teams at least this large use sparse filters


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment configuration (method x team size x knobs)."""

    n_r: int = 8
    method: CoordinationMethod = field(
        default_factory=lambda: CoordinationMethod("sequential")
    )
    n_targets: int = None  # defaults to one target per robot
    horizon: int = 2
    steps: int = 100
    burn_in: int = 20
    trials: int = 20
    mcts_iterations: int = 1000
    mcts_time_ms: float = None  # wall-time budget; replaces iterations if set
    objective_samples: int = 32
    master_seed: int = 0
    planner: str = "mcts"  # mcts | exhaustive
    m_ref: int = 256
    sparse_threshold: float = None  # None = auto by team size
    log_subproblems: bool = False
    log_stride: int = 4
    evaluate_objective: bool = False
    metric_samples: int = 32

    def __post_init__(self):
        if self.steps <= self.burn_in:
            raise ValueError("steps must exceed burn_in")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n_targets is None:
            object.__setattr__(self, "n_targets", self.n_r)

    @property
    def effective_sparse_threshold(self) -> float:
        if self.sparse_threshold is not None:
            return self.sparse_threshold
        return 1e-3 if self.n_r >= SPARSE_FILTER_TEAM_SIZE else 0.0

    def planning_setup(self, kernel) -> PlanningSetup:
        if self.mcts_time_ms is not None:
            budget = Budget(wall_time_s=self.mcts_time_ms / 1000.0)
        else:
            budget = Budget(iterations=self.mcts_iterations)
        return PlanningSetup(
            horizon=self.horizon,
            samples=self.objective_samples,
            sensor=RangeSensorModel(),
            kernel=kernel,
            planner=self.planner,
            budget=budget,
            m_ref=self.m_ref,
        )


@dataclass
class TrialMetrics:
    method: str
    n_r: int
    n_d: int
    trial: int
    steps: int
    burn_in: int
    entropy_series: np.ndarray  # (steps, n_targets) post-step filter entropies
    objective_series: np.ndarray  # (steps,) or empty
    messages: np.ndarray
    sequential_steps: np.ndarray
    parallel_wall: np.ndarray
    total_wall: np.ndarray
    fallback_count: int = 0

    @property
    def mean_entropy(self) -> float:
        """Average per-target entropy over the post-burn-in steps."""
        return float(self.entropy_series[self.burn_in :].mean())

    @property
    def mean_objective(self) -> float:
        if self.objective_series.size == 0:
            return math.nan
        return float(self.objective_series[self.burn_in :].mean())

    def to_row(self) -> dict:
        return {
            "schema_version": METRICS_SCHEMA_VERSION,
            "kind": "trial",
            "method": self.method,
            "n_r": self.n_r,
            "n_d": self.n_d,
            "trial": self.trial,
            "subproblem": "",
            "entropy": repr(self.mean_entropy),
            "objective": repr(self.mean_objective),
            "normalized_objective": "nan",
            "redundancy_per_robot": "nan",
            "objective_per_robot": "nan",
            "messages_per_epoch": repr(float(self.messages.mean())),
            "sequential_steps": repr(float(self.sequential_steps.mean())),
            "parallel_wall_time": repr(float(self.parallel_wall.mean())),
            "total_wall_time": repr(float(self.total_wall.sum())),
        }


def initial_world(cfg: ExperimentConfig, trial_seed: int) -> WorldState:
    """Uniformly random robot/target placement; filters are point masses at
    the true target cells (initial positions are known)."""
    side = grid_side(cfg.n_r)
    grid = Grid(side)
    rng = seeding.generator(trial_seed, 0, 0, seeding.INIT_STATE)
    robots = tuple(
        (int(rng.integers(side)), int(rng.integers(side))) for _ in range(cfg.n_r)
    )
    targets = tuple(
        (int(rng.integers(side)), int(rng.integers(side)))
        for _ in range(cfg.n_targets)
    )
    thr = cfg.effective_sparse_threshold
    filters = tuple(
        HistogramFilter.point_mass(grid, cell, sparse_threshold=thr)
        for cell in targets
    )
    return WorldState(
        time=0, grid=grid, robot_positions=robots, target_positions=targets,
        filters=filters,
    )


def _plan_epoch(
    cfg: ExperimentConfig,
    method: CoordinationMethod,
    world: WorldState,
    setup: PlanningSetup,
    epoch: int,
    trial_seed: int,
) -> PlanResult:
    if method.name == "random":
        selection = run_random(world, cfg.horizon, epoch, trial_seed)
        graph = build_empty_graph(cfg.n_r)
        decisions = tuple(sorted(selection, key=lambda a: a.robot_id))
        return PlanResult(
            selection=selection,
            graph=graph,
            scopes=(None,) * cfg.n_r,
            decisions=decisions,
            messages=(),
            round_wall_times=(0.0,),
            fallback_robots=(),
        )
    graph, scopes = build_graph_for_method(method, world, epoch, trial_seed)
    return run_distributed_plan(graph, world, setup, epoch, trial_seed, scopes)


def run_trial(cfg: ExperimentConfig, trial_index: int):
    """One closed-loop simulation; returns (TrialMetrics, records)."""
    trial_seed = seeding.stream_seed(cfg.master_seed, trial_index)
    world = initial_world(cfg, trial_seed)
    kernel = MotionKernel(world.grid)
    setup = cfg.planning_setup(kernel)
    sensor = setup.sensor
    method = cfg.method

    n_steps = cfg.steps
    entropy_series = np.zeros((n_steps, cfg.n_targets))
    objective_series = (
        np.zeros(n_steps) if cfg.evaluate_objective else np.zeros(0)
    )
    messages = np.zeros(n_steps)
    seq_steps = np.zeros(n_steps)
    parallel_wall = np.zeros(n_steps)
    total_wall = np.zeros(n_steps)
    fallback_count = 0
    records = []

    for t in range(n_steps):
        t0 = time.perf_counter()
        result = _plan_epoch(cfg, method, world, setup, t, trial_seed)
        total_wall[t] = time.perf_counter() - t0
        messages[t] = result.message_count
        seq_steps[t] = result.n_sequential_steps
        parallel_wall[t] = result.parallel_wall_time
        fallback_count += len(result.fallback_robots)

        if cfg.log_subproblems and t >= cfg.burn_in and (t - cfg.burn_in) % cfg.log_stride == 0:
            records.append(
                build_record(
                    method=method,
                    world=world,
                    plan_result=result,
                    horizon=cfg.horizon,
                    sensor=sensor,
                    moving_targets=True,
                    trial_index=trial_index,
                    trial_seed=trial_seed,
                    epoch=t,
                    m_ref=64,
                )
            )

        if cfg.evaluate_objective:
            ctx = ObjectiveContext(
                grid=world.grid,
                robot_positions=world.robot_positions,
                filters=world.filters,
                horizon=cfg.horizon,
                samples=cfg.metric_samples,
                seed=seeding.stream_seed(trial_seed, t, 0, seeding.METRIC_EVAL),
                sensor=sensor,
                kernel=kernel,
            )
            objective_series[t] = RolloutEvaluator(ctx).value(result.selection)

        # execute first controls
        robots = tuple(
            step_robot(world.robot_positions[i], a.controls[0], world.grid)
            for i, a in enumerate(result.decisions)
        )

        # target motion
        targets = []
        for j, cell in enumerate(world.target_positions):
            rng = seeding.generator(trial_seed, t, j, seeding.TARGET_MOTION)
            targets.append(step_target(cell, world.grid, rng))
        targets = tuple(targets)

        # sensing: every robot observes every target; fuse centrally
        sense_rng = seeding.generator(trial_seed, t, 0, seeding.SENSING)
        filters = []
        for j in range(cfg.n_targets):
            f = world.filters[j].predict(kernel)
            for i in range(cfg.n_r):
                y = sample_observation(robots[i], targets[j], sensor, sense_rng)
                try:
                    f = f.update(y, robots[i], sensor)
                except DegenerateUpdateError:
                    pass
            filters.append(f)
            entropy_series[t, j] = f.entropy()

        world = WorldState(
            time=t + 1,
            grid=world.grid,
            robot_positions=robots,
            target_positions=targets,
            filters=tuple(filters),
        )

    metrics = TrialMetrics(
        method=method.label,
        n_r=cfg.n_r,
        n_d=method.n_d,
        trial=trial_index,
        steps=cfg.steps,
        burn_in=cfg.burn_in,
        entropy_series=entropy_series,
        objective_series=objective_series,
        messages=messages,
        sequential_steps=seq_steps,
        parallel_wall=parallel_wall,
        total_wall=total_wall,
        fallback_count=fallback_count,
    )
    return metrics, records


def _sweep_task(args):
    cfg, trial_index = args
    metrics, records = run_trial(cfg, trial_index)
    return metrics, [r.to_json() for r in records]


def run_sweep(configs, workers: int = None, records_dir=None):
    """Run all (config, trial) pairs, optionally in a process pool.

    Returns (metrics list, records list); records are also written to
    ``records_dir`` (one JSON file each) when given. Failed trials are
    flagged and skipped rather than aborting the sweep.
    """
    tasks = [(cfg, t) for cfg in configs for t in range(cfg.trials)]
    all_metrics, all_records, failures = [], [], []
    if workers is None:
        workers = 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_task, task) for task in tasks]
            for (cfg, t), fut in zip(tasks, futures):
                try:
                    metrics, rec_jsons = fut.result()
                except Exception as exc:  # flag and continue
                    failures.append((cfg.method.label, cfg.n_r, t, repr(exc)))
                    continue
                all_metrics.append(metrics)
                all_records.extend(
                    SubproblemRecord.from_json(js) for js in rec_jsons
                )
    else:
        for cfg, t in tasks:
            try:
                metrics, records = run_trial(cfg, t)
            except Exception as exc:  # flag and continue
                failures.append((cfg.method.label, cfg.n_r, t, repr(exc)))
                continue
            all_metrics.append(metrics)
            all_records.extend(records)

    if records_dir is not None:
        os.makedirs(records_dir, exist_ok=True)
        for rec in all_records:
            name = (
                f"{rec.method}_nr{len(rec.robot_positions)}"
                f"_trial{rec.trial_index}_epoch{rec.epoch}.json"
            )
            rec.save(os.path.join(records_dir, name))
    return all_metrics, all_records, failures


def replay_subproblems(records, methods, planner: str = "exhaustive", m_ref: int = 64):
    """Evaluate each coordination method on each frozen subproblem.

    Every method plans on the identical snapshot; values come from the
    record's reference evaluation stream and are normalized per subproblem
    by the best method's value.
    """
    rows = []
    for rec in records:
        world = rec.world()
        setup = PlanningSetup(
            horizon=rec.horizon,
            samples=m_ref,
            sensor=rec.sensor_model(),
            kernel=rec.motion_kernel(),
            planner=planner,
            m_ref=m_ref,
        )
        ref_ev = RolloutEvaluator(rec.reference_context())
        sub_id = f"t{rec.trial_index}e{rec.epoch}"
        values = {}
        for method in methods:
            if method.name == "random":
                selection = run_random(world, rec.horizon, rec.epoch, rec.trial_seed)
            else:
                graph, scopes = build_graph_for_method(
                    method, world, rec.epoch, rec.trial_seed
                )
                selection = run_distributed_plan(
                    graph, world, setup, rec.epoch, rec.trial_seed, scopes
                ).selection
            values[method.label] = ref_ev.value(selection, range(m_ref))
        best = max(values.values())
        for label, value in values.items():
            rows.append(
                {
                    "schema_version": METRICS_SCHEMA_VERSION,
                    "kind": "replay",
                    "method": label,
                    "n_r": len(rec.robot_positions),
                    "n_d": rec.n_d,
                    "trial": rec.trial_index,
                    "subproblem": sub_id,
                    "entropy": "nan",
                    "objective": repr(value),
                    "normalized_objective": repr(value / best if best > 0 else 0.0),
                    "redundancy_per_robot": "nan",
                    "objective_per_robot": "nan",
                    "messages_per_epoch": "nan",
                    "sequential_steps": "nan",
                    "parallel_wall_time": "nan",
                    "total_wall_time": "nan",
                }
            )
    return rows


def redundancy_rows(records, m_cap: int = 64):
    """Per-record redundancy-per-robot and objective-per-robot (the scaling
    quantities), using sampled capacities with fixed per-pair streams."""
    from .bounds import total_redundancy, weight_hat
    from .objective import capacity_matrix

    rows = []
    for rec in records:
        ctx = rec.reference_context()
        caps = capacity_matrix(ctx, m_cap=m_cap)
        weights = weight_hat(caps)
        summary = total_redundancy(weights, rec.planner_graph())
        value = rec.logged_value
        n_r = len(rec.robot_positions)
        rows.append(
            {
                "schema_version": METRICS_SCHEMA_VERSION,
                "kind": "redundancy",
                "method": rec.method,
                "n_r": n_r,
                "n_d": rec.n_d,
                "trial": rec.trial_index,
                "subproblem": f"t{rec.trial_index}e{rec.epoch}",
                "entropy": "nan",
                "objective": repr(value),
                "normalized_objective": "nan",
                "redundancy_per_robot": repr(summary.per_robot),
                "objective_per_robot": repr(value / n_r),
                "messages_per_epoch": repr(float(rec.message_count)),
                "sequential_steps": repr(float(len(set(rec.rounds)))),
                "parallel_wall_time": "nan",
                "total_wall_time": "nan",
            }
        )
    return rows


# ---------------------------------------------------------------------------
# metrics table IO


def write_metrics(path, rows):
    """Write metric rows (dicts keyed by METRICS_COLUMNS) as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_metrics(path):
    """Read a metrics CSV, validating the schema; raises on missing fields."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_COLUMNS:
            raise ValueError(
                f"unexpected metrics header {reader.fieldnames!r}"
            )
        rows = []
        for row in reader:
            if any(row[c] in (None, "") and c not in ("subproblem",) for c in METRICS_COLUMNS):
                raise ValueError(f"row with missing fields: {row!r}")
            if int(row["schema_version"]) != METRICS_SCHEMA_VERSION:
                raise ValueError(f"unsupported schema {row['schema_version']}")
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# config files (plain key = value lines)


_CONFIG_KEYS = {
    "n_r": int,
    "n_targets": int,
    "method": str,
    "horizon": int,
    "steps": int,
    "burn_in": int,
    "trials": int,
    "mcts_iterations": int,
    "mcts_time_ms": float,
    "objective_samples": int,
    "master_seed": int,
    "planner": str,
    "m_ref": int,
    "sparse_threshold": float,
    "log_subproblems": lambda s: s.lower() in ("1", "true", "yes"),
    "log_stride": int,
    "evaluate_objective": lambda s: s.lower() in ("1", "true", "yes"),
    "metric_samples": int,
    "n_d": int,
    "robot_range": float,
    "target_range": float,
}


def parse_config_file(path) -> ExperimentConfig:
    """Parse a ``key = value`` config file (# starts a comment)."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _CONFIG_KEYS[key](raw)
    return config_from_values(values)


def config_from_values(values: dict) -> ExperimentConfig:
    values = dict(values)
    method_text = values.pop("method", "sequential")
    n_d = values.pop("n_d", None)
    robot_range = values.pop("robot_range", None)
    target_range = values.pop("target_range", None)
    method = CoordinationMethod.parse(method_text)
    if n_d is not None:
        method = replace(method, n_d=n_d)
    if robot_range is not None:
        method = replace(method, robot_range=robot_range)
    if target_range is not None:
        method = replace(method, target_range=target_range)
    return ExperimentConfig(method=method, **values)
