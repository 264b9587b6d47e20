"""Multi-robot assignment strategies over a directed acyclic decision graph.

Robots occupy rounds; a robot conditions its plan on the decisions of its
in-neighbors, which always sit in strictly earlier rounds. Sequential greedy
is the complete DAG (one robot per round); RSP assigns robots to a constant
number of rounds uniformly at random; RRSP additionally drops in-edges from
far-away robots and far-away targets from each robot's objective scope.
Myopic and random planning are the no-edge baselines.
"""

import struct
import time
from dataclasses import dataclass, field

from . import seeding
from .mcts import Budget, exhaustive_plan, plan_anytime
from .objective import (
    ConditionalObjective,
    ExactObjectiveOracle,
    ObjectiveContext,
    RolloutEvaluator,
)
from .sensing import RangeSensorModel, euclidean
from .submodular import Action, Selection
from .world import N_CONTROLS, WorldState


@dataclass(frozen=True)
class PlannerGraph:
    """Who-sees-whose-decision structure: ``rounds[i]`` is robot i's round,
    ``in_neighbors[i]`` the robots whose decisions i receives."""

    n_r: int
    rounds: tuple
    in_neighbors: tuple

    def __post_init__(self):
        if len(self.rounds) != self.n_r or len(self.in_neighbors) != self.n_r:
            raise ValueError("rounds/in_neighbors must have one entry per robot")
        object.__setattr__(
            self, "in_neighbors", tuple(frozenset(s) for s in self.in_neighbors)
        )
        for i, nbrs in enumerate(self.in_neighbors):
            for j in nbrs:
                if self.rounds[j] >= self.rounds[i]:
                    raise ValueError(
                        f"edge {j}->{i} does not go from an earlier round"
                    )

    def order(self):
        """Robots sorted by (round, id): the sequential order the
        suboptimality analysis references."""
        return sorted(range(self.n_r), key=lambda i: (self.rounds[i], i))

    def predecessors(self, i: int) -> frozenset:
        """Robots strictly before i in the (round, id) order."""
        key = (self.rounds[i], i)
        return frozenset(
            j for j in range(self.n_r) if j != i and (self.rounds[j], j) < key
        )

    def ignored(self, i: int) -> frozenset:
        """Predecessors whose decisions robot i does not receive."""
        return self.predecessors(i) - self.in_neighbors[i]

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.in_neighbors)

    @property
    def n_sequential_steps(self) -> int:
        return len(set(self.rounds))

    def round_members(self):
        rounds = {}
        for i, r in enumerate(self.rounds):
            rounds.setdefault(r, []).append(i)
        return [rounds[r] for r in sorted(rounds)]


def build_sequential_graph(n_r: int) -> PlannerGraph:
    """Complete DAG: robot i in round i, receiving all earlier decisions."""
    if n_r < 1:
        raise ValueError("team size must be >= 1")
    return PlannerGraph(
        n_r=n_r,
        rounds=tuple(range(n_r)),
        in_neighbors=tuple(frozenset(range(i)) for i in range(n_r)),
    )


def build_empty_graph(n_r: int) -> PlannerGraph:
    """All robots in one round with no edges (myopic structure)."""
    return PlannerGraph(
        n_r=n_r, rounds=(0,) * n_r, in_neighbors=(frozenset(),) * n_r
    )


def rsp_assign(n_r: int, n_d: int, rng) -> PlannerGraph:
    """Each robot draws a round uniformly from {1..n_d}; in-neighbors are all
    robots in strictly earlier rounds."""
    if n_d < 1:
        raise ValueError("n_d must be >= 1")
    rounds = tuple(int(r) for r in rng.integers(0, n_d, size=n_r))
    in_neighbors = tuple(
        frozenset(j for j in range(n_r) if rounds[j] < rounds[i]) for i in range(n_r)
    )
    return PlannerGraph(n_r=n_r, rounds=rounds, in_neighbors=in_neighbors)


def apply_range_limits(
    graph: PlannerGraph,
    world: WorldState,
    robot_range: float = 20.0,
    target_range: float = 12.0,
):
    """Range-limited pruning: drop in-edges from robots beyond
    ``robot_range`` and restrict each robot's objective to targets whose
    filter mean lies within ``target_range``.

    Returns the pruned graph and the per-robot target scopes; both feed the
    cost accounting for ignored decisions and objective approximation.
    """
    means = [f.mean_position() for f in world.filters]
    pruned = []
    for i in range(graph.n_r):
        pos = world.robot_positions[i]
        pruned.append(
            frozenset(
                j
                for j in graph.in_neighbors[i]
                if euclidean(pos, world.robot_positions[j]) <= robot_range
            )
        )
    scopes = tuple(
        tuple(
            j
            for j in range(world.n_targets)
            if euclidean(world.robot_positions[i], means[j]) <= target_range
        )
        for i in range(graph.n_r)
    )
    limited = PlannerGraph(
        n_r=graph.n_r, rounds=graph.rounds, in_neighbors=tuple(pruned)
    )
    return limited, scopes


@dataclass(frozen=True)
class CoordinationMethod:
    """Planner coordination strategy and its parameters."""

    name: str  # sequential | rsp | rrsp | myopic | random
    n_d: int = 1
    robot_range: float = 20.0
    target_range: float = 12.0
    redraw_rounds: bool = True

    _NAMES = ("sequential", "rsp", "rrsp", "myopic", "random")

    def __post_init__(self):
        if self.name not in self._NAMES:
            raise ValueError(f"unknown method {self.name!r}")
        if self.n_d < 1:
            raise ValueError("n_d must be >= 1")

    @property
    def label(self) -> str:
        if self.name in ("rsp", "rrsp"):
            return f"{self.name}{self.n_d}"
        return self.name

    @classmethod
    def parse(cls, text: str) -> "CoordinationMethod":
        text = text.strip().lower()
        for base in ("rrsp", "rsp"):
            if text.startswith(base):
                rest = text[len(base):]
                return cls(name=base, n_d=int(rest) if rest else 4)
        return cls(name=text)


@dataclass(frozen=True)
class DecisionMessage:
    """One decision announcement: sent once per planner-graph edge."""

    sender: int
    action: Action
    epoch: int

    def to_bytes(self) -> bytes:
        return struct.pack(
            "<iii", self.sender, self.action.robot_id, self.epoch
        ) + bytes(self.action.controls)


def _lexicographic_first_action(robot_id: int, horizon: int) -> Action:
    return Action(robot_id, (0,) * horizon)


@dataclass(frozen=True)
class PlanningSetup:
    """Everything the per-robot planner needs besides the world state."""

    horizon: int = 2
    samples: int = 32
    sensor: object = field(default_factory=RangeSensorModel)
    kernel: object = None
    planner: str = "mcts"  # mcts | exhaustive
    budget: Budget = field(default_factory=lambda: Budget(iterations=1000))
    m_ref: int = 256
    exact: bool = False  # evaluate with the exact tiny-instance oracle


@dataclass
class PlanResult:
    selection: Selection
    graph: PlannerGraph
    scopes: tuple  # per-robot target scope or None (= all targets)
    decisions: tuple
    messages: tuple
    round_wall_times: tuple
    fallback_robots: tuple

    @property
    def message_count(self):
        return len(self.messages)

    @property
    def n_sequential_steps(self):
        return self.graph.n_sequential_steps

    @property
    def parallel_wall_time(self):
        return float(sum(self.round_wall_times))


def _plan_robot(world, setup, robot_id, received, scope, epoch, trial_seed):
    """One robot's decision given the decisions it received; always returns
    a valid action (the conditional greedy step of the distributed plan)."""
    if scope is not None and len(scope) == 0:
        return _lexicographic_first_action(robot_id, setup.horizon)
    ctx = ObjectiveContext(
        grid=world.grid,
        robot_positions=world.robot_positions,
        filters=world.filters,
        horizon=setup.horizon,
        samples=setup.samples,
        seed=seeding.stream_seed(trial_seed, epoch, robot_id, seeding.OBJECTIVE),
        sensor=setup.sensor,
        kernel=setup.kernel,
        target_scope=scope,
    )
    evaluator = ExactObjectiveOracle(ctx) if setup.exact else RolloutEvaluator(ctx)
    objective = ConditionalObjective(evaluator, robot_id, received)
    if setup.planner == "exhaustive":
        action, _ = exhaustive_plan(objective, setup.m_ref)
        return action
    rng = seeding.generator(trial_seed, epoch, robot_id, seeding.MCTS)
    return plan_anytime(objective, setup.budget, rng)


def run_distributed_plan(
    graph: PlannerGraph,
    world: WorldState,
    setup: PlanningSetup,
    epoch: int,
    trial_seed: int,
    scopes=None,
) -> PlanResult:
    """Execute the round-synchronous distributed plan.

    Robots in a round plan independently of each other (their inputs are
    frozen when the round starts), so executing them in any order yields
    identical decisions; the recorded per-round wall time is the maximum
    per-robot planning time, matching the parallel reading of a round.
    """
    n_r = graph.n_r
    decisions = [None] * n_r
    fallbacks = []
    round_times = []
    for members in graph.round_members():
        per_robot_times = []
        for i in members:
            received = Selection(decisions[j] for j in graph.in_neighbors[i])
            scope = None if scopes is None else scopes[i]
            t0 = time.perf_counter()
            try:
                decisions[i] = _plan_robot(
                    world, setup, i, received, scope, epoch, trial_seed
                )
            except Exception:
                decisions[i] = _lexicographic_first_action(i, setup.horizon)
                fallbacks.append(i)
            per_robot_times.append(time.perf_counter() - t0)
        round_times.append(max(per_robot_times))

    messages = tuple(
        DecisionMessage(sender=j, action=decisions[j], epoch=epoch)
        for i in range(n_r)
        for j in sorted(graph.in_neighbors[i])
    )
    return PlanResult(
        selection=Selection(decisions),
        graph=graph,
        scopes=tuple(scopes) if scopes is not None else (None,) * n_r,
        decisions=tuple(decisions),
        messages=messages,
        round_wall_times=tuple(round_times),
        fallback_robots=tuple(fallbacks),
    )


def run_sequential_greedy(
    world: WorldState, setup: PlanningSetup, epoch: int, trial_seed: int
) -> Selection:
    """Robots decide in index order, each maximizing conditional gain given
    all earlier decisions."""
    decisions = []
    for i in range(world.n_robots):
        decisions.append(
            _plan_robot(world, setup, i, Selection(decisions), None, epoch, trial_seed)
        )
    return Selection(decisions)


def run_myopic(
    world: WorldState, setup: PlanningSetup, epoch: int, trial_seed: int
) -> Selection:
    """Every robot plans alone (no conditioning)."""
    return Selection(
        _plan_robot(world, setup, i, Selection(), None, epoch, trial_seed)
        for i in range(world.n_robots)
    )


def run_random(world: WorldState, horizon: int, epoch: int, trial_seed: int) -> Selection:
    """Uniformly random trajectory per robot."""
    decisions = []
    for i in range(world.n_robots):
        rng = seeding.generator(trial_seed, epoch, i, seeding.RANDOM_ACTION)
        controls = tuple(int(c) for c in rng.integers(0, N_CONTROLS, size=horizon))
        decisions.append(Action(i, controls))
    return Selection(decisions)


def build_graph_for_method(
    method: CoordinationMethod,
    world: WorldState,
    epoch: int,
    trial_seed: int,
):
    """Planner graph (and target scopes, for range-limited methods) for one
    epoch of the given coordination method."""
    n_r = world.n_robots
    if method.name == "sequential":
        return build_sequential_graph(n_r), None
    if method.name in ("myopic", "random"):
        return build_empty_graph(n_r), None
    draw_epoch = epoch if method.redraw_rounds else 0
    rng = seeding.generator(trial_seed, draw_epoch, 0, seeding.RSP_ROUNDS)
    graph = rsp_assign(n_r, method.n_d, rng)
    if method.name == "rrsp":
        return apply_range_limits(
            graph, world, method.robot_range, method.target_range
        )
    return graph, None
