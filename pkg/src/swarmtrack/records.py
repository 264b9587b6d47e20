"""Frozen planning-instance records for offline verification and replay.

A record captures everything one planning epoch saw: filters, robot states,
the planner graph, per-robot scopes and decisions, and the seeds, so that
any solver or bound check can be re-run on the identical subproblem later.
Values are serialized with shortest round-trip float repr, which preserves
them bit-exactly.
"""

import json
from dataclasses import asdict, dataclass, replace

from . import seeding
from .objective import DiscreteSensorModel, ObjectiveContext, RolloutEvaluator
from .sensing import HistogramFilter, RangeSensorModel
from .submodular import Action, Selection
from .world import Grid, MotionKernel, WorldState

SCHEMA_VERSION = 1


class IntegrityError(ValueError):
    """Replaying the record did not reproduce its logged values."""


def _sensor_to_dict(sensor):
    if isinstance(sensor, RangeSensorModel):
        return {
            "type": "range",
            "saturation": sensor.saturation,
            "var_base": sensor.var_base,
            "var_scale": sensor.var_scale,
        }
    if isinstance(sensor, DiscreteSensorModel):
        if sensor.prob_fn is not None:
            raise ValueError("custom detection callables are not serializable")
        return {
            "type": "discrete",
            "range_scale": sensor.range_scale,
            "floor": sensor.floor,
        }
    raise ValueError(f"unknown sensor type {type(sensor)!r}")


def _sensor_from_dict(d):
    if d["type"] == "range":
        return RangeSensorModel(
            saturation=d["saturation"], var_base=d["var_base"], var_scale=d["var_scale"]
        )
    if d["type"] == "discrete":
        return DiscreteSensorModel(range_scale=d["range_scale"], floor=d["floor"])
    raise ValueError(f"unknown sensor type {d['type']!r}")


@dataclass(frozen=True)
class SubproblemRecord:
    """One frozen planning epoch; self-contained and versioned."""

    version: int
    method: str
    n_d: int
    epoch: int
    trial_index: int
    trial_seed: int
    grid_side: int
    horizon: int
    sensor: dict
    moving_targets: bool
    sparse_threshold: float
    robot_positions: tuple  # ((x, y), ...)
    target_positions: tuple
    filters: tuple  # per target: tuple of (cell_index, probability)
    rounds: tuple
    in_neighbors: tuple  # per robot: tuple of robot ids
    target_scopes: tuple  # per robot: tuple of target ids, or None for all
    decisions: tuple  # per robot: tuple of control symbols
    logged_value: float
    logged_m_ref: int
    message_count: int
    fallback_robots: tuple = ()

    # -- reconstruction -------------------------------------------------

    def grid(self) -> Grid:
        return Grid(self.grid_side)

    def motion_kernel(self):
        return MotionKernel(self.grid()) if self.moving_targets else None

    def sensor_model(self):
        return _sensor_from_dict(self.sensor)

    def rebuild_filters(self):
        grid = self.grid()
        return tuple(
            HistogramFilter.from_cell_probs(
                grid, dict(pairs), sparse_threshold=self.sparse_threshold
            )
            for pairs in self.filters
        )

    def world(self) -> WorldState:
        return WorldState(
            time=self.epoch,
            grid=self.grid(),
            robot_positions=tuple(tuple(p) for p in self.robot_positions),
            target_positions=tuple(tuple(p) for p in self.target_positions),
            filters=self.rebuild_filters(),
        )

    def selection(self) -> Selection:
        return Selection(
            Action(i, tuple(c)) for i, c in enumerate(self.decisions)
        )

    def planner_graph(self):
        from .coordination import PlannerGraph

        return PlannerGraph(
            n_r=len(self.robot_positions),
            rounds=tuple(self.rounds),
            in_neighbors=tuple(frozenset(s) for s in self.in_neighbors),
        )

    def reference_seed(self) -> int:
        return seeding.stream_seed(
            self.trial_seed, self.epoch, 0, seeding.REFERENCE
        )

    def reference_context(self, scope=None) -> ObjectiveContext:
        return ObjectiveContext(
            grid=self.grid(),
            robot_positions=tuple(tuple(p) for p in self.robot_positions),
            filters=self.rebuild_filters(),
            horizon=self.horizon,
            samples=self.logged_m_ref,
            seed=self.reference_seed(),
            sensor=self.sensor_model(),
            kernel=self.motion_kernel(),
            target_scope=scope,
        )

    def reference_value(self, selection: Selection) -> float:
        ev = RolloutEvaluator(self.reference_context())
        return ev.value(selection, range(self.logged_m_ref))

    def check_integrity(self, atol: float = 1e-7):
        """Re-evaluate the logged selection on the rebuilt instance; raise
        if the logged value is not reproduced."""
        value = self.reference_value(self.selection())
        if abs(value - self.logged_value) > atol:
            raise IntegrityError(
                f"replayed value {value!r} != logged {self.logged_value!r}"
            )
        return value

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "SubproblemRecord":
        d = json.loads(text)
        if d["version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported record version {d['version']}")
        d["robot_positions"] = tuple(tuple(p) for p in d["robot_positions"])
        d["target_positions"] = tuple(tuple(p) for p in d["target_positions"])
        d["filters"] = tuple(
            tuple((int(i), float(p)) for i, p in pairs) for pairs in d["filters"]
        )
        d["rounds"] = tuple(d["rounds"])
        d["in_neighbors"] = tuple(tuple(s) for s in d["in_neighbors"])
        d["target_scopes"] = tuple(
            tuple(s) if s is not None else None for s in d["target_scopes"]
        )
        d["decisions"] = tuple(tuple(c) for c in d["decisions"])
        d["fallback_robots"] = tuple(d.get("fallback_robots", ()))
        return cls(**d)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "SubproblemRecord":
        with open(path) as fh:
            return cls.from_json(fh.read())


def build_record(
    *,
    method,
    world: WorldState,
    plan_result,
    horizon: int,
    sensor,
    moving_targets: bool,
    trial_index: int,
    trial_seed: int,
    epoch: int,
    m_ref: int = 64,
) -> SubproblemRecord:
    """Freeze one executed planning epoch into a record, logging the
    reference value of the chosen selection for later integrity checks."""
    sparse = world.filters[0].sparse_threshold if world.filters else 0.0
    rec = SubproblemRecord(
        version=SCHEMA_VERSION,
        method=method.label,
        n_d=method.n_d,
        epoch=epoch,
        trial_index=trial_index,
        trial_seed=trial_seed,
        grid_side=world.grid.side,
        horizon=horizon,
        sensor=_sensor_to_dict(sensor),
        moving_targets=moving_targets,
        sparse_threshold=sparse,
        robot_positions=tuple(world.robot_positions),
        target_positions=tuple(world.target_positions),
        filters=tuple(
            tuple(sorted(f.cell_probs().items())) for f in world.filters
        ),
        rounds=tuple(plan_result.graph.rounds),
        in_neighbors=tuple(
            tuple(sorted(s)) for s in plan_result.graph.in_neighbors
        ),
        target_scopes=tuple(
            tuple(s) if s is not None else None for s in plan_result.scopes
        ),
        decisions=tuple(a.controls for a in plan_result.decisions),
        logged_value=0.0,
        logged_m_ref=m_ref,
        message_count=plan_result.message_count,
        fallback_robots=tuple(plan_result.fallback_robots),
    )
    value = rec.reference_value(rec.selection())
    return replace(rec, logged_value=value)
