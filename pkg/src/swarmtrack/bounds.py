"""Inter-robot redundancy weights, planning-cost decomposition, and
numerical verification of the suboptimality bounds.

The guarantees under test: any basis satisfies
``g(X*) <= 2 g(X^d) + sum_i gamma_gen_i`` (general-assignment bound), the
distributed refinement splits ``gamma_gen`` into distributed / objective /
planner costs, and the total distributed cost is dominated by the
pairwise-capacity weights of the ignored robot pairs. Exact tiny instances
make every quantity computable by enumeration, so the checks are sharp.
"""

from dataclasses import dataclass

import numpy as np

from .coordination import PlannerGraph
from .objective import (
    ExactObjectiveOracle,
    ObjectiveContext,
    RolloutEvaluator,
    capacity_matrix,
)
from .records import SubproblemRecord
from .submodular import (
    Action,
    PartitionMatroid,
    Selection,
    brute_force_optimum,
    second_derivative,
)
from .world import enumerate_trajectories

EXACT_TOL = 1e-9


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric non-negative pairwise redundancy bounds, zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("weight matrix must be square")
        if not np.allclose(v, v.T, atol=1e-12):
            raise ValueError("weight matrix must be symmetric")
        if np.any(v < -1e-12) or np.any(np.abs(np.diag(v)) > 1e-12):
            raise ValueError("weights must be non-negative with zero diagonal")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_r(self):
        return self.values.shape[0]

    def __getitem__(self, key):
        return float(self.values[key])


def weight_hat(capacities: np.ndarray) -> WeightMatrix:
    """Pairwise weights from channel capacities: the capacity two robots
    share on each target, summed over targets."""
    c = np.asarray(capacities, dtype=float)
    n_r = c.shape[0]
    w = np.zeros((n_r, n_r))
    for i in range(n_r):
        for j in range(i + 1, n_r):
            w[i, j] = w[j, i] = float(np.minimum(c[i], c[j]).sum())
    return WeightMatrix(w)


def action_blocks(ctx: ObjectiveContext):
    """Per-robot local action sets (all trajectories from the current pose)."""
    return [
        [
            Action(i, controls)
            for controls in enumerate_trajectories(pos, ctx.horizon, ctx.grid)
        ]
        for i, pos in enumerate(ctx.robot_positions)
    ]


def build_matroid(ctx: ObjectiveContext) -> PartitionMatroid:
    return PartitionMatroid(tuple(tuple(b) for b in action_blocks(ctx)))


def weight_exact(i: int, j: int, ctx: ObjectiveContext) -> float:
    """Tight pairwise weight: search the product of two robots' action sets
    for the largest shared per-target information."""
    if i == j:
        raise ValueError("pairwise weight needs two distinct robots")
    oracle = ExactObjectiveOracle(ctx.with_scope(None))
    blocks = action_blocks(ctx)
    vec_i = [oracle.per_target(Selection([a])) for a in blocks[i]]
    vec_j = [oracle.per_target(Selection([a])) for a in blocks[j]]
    return max(
        float(np.minimum(vi, vj).sum()) for vi in vec_i for vj in vec_j
    )


def weight_exact_matrix(ctx: ObjectiveContext) -> WeightMatrix:
    n_r = len(ctx.robot_positions)
    w = np.zeros((n_r, n_r))
    for i in range(n_r):
        for j in range(i + 1, n_r):
            w[i, j] = w[j, i] = weight_exact(i, j, ctx)
    return WeightMatrix(w)


@dataclass(frozen=True)
class RedundancySummary:
    """Both redundancy readings of a weight matrix for a planner graph."""

    ignored_pair_sum: float  # sum over robots of weights to ignored robots
    total_pair_sum: float  # sum over all unordered pairs
    n_r: int

    @property
    def per_robot(self) -> float:
        return self.total_pair_sum / self.n_r


def total_redundancy(weights: WeightMatrix, graph: PlannerGraph) -> RedundancySummary:
    ignored = 0.0
    for i in range(graph.n_r):
        for j in graph.ignored(i):
            ignored += weights[i, j]
    total = float(np.triu(weights.values, k=1).sum())
    return RedundancySummary(
        ignored_pair_sum=ignored, total_pair_sum=total, n_r=graph.n_r
    )


# ---------------------------------------------------------------------------
# instances and costs


@dataclass(frozen=True)
class PlanningInstance:
    """A planning epoch in evaluable form: full-scope context, coordination
    graph, per-robot scopes, and the decisions actually taken."""

    ctx: ObjectiveContext  # full scope
    graph: PlannerGraph
    decisions: tuple  # Action per robot
    scopes: tuple  # per robot: tuple of target ids or None

    @classmethod
    def from_record(cls, rec: SubproblemRecord) -> "PlanningInstance":
        return cls(
            ctx=rec.reference_context(),
            graph=rec.planner_graph(),
            decisions=tuple(rec.selection()),
            scopes=rec.target_scopes,
        )

    @property
    def selection(self) -> Selection:
        return Selection(self.decisions)

    @property
    def n_r(self):
        return self.graph.n_r

    def received(self, i: int) -> Selection:
        return Selection(self.decisions[j] for j in self.graph.in_neighbors[i])

    def preceding(self, i: int) -> Selection:
        return Selection(self.decisions[j] for j in self.graph.predecessors(i))

    def exact_feasible(self) -> bool:
        ctx = self.ctx
        return (
            getattr(ctx.sensor, "is_discrete", False)
            and ctx.horizon == 1
            and ctx.grid.n_cells <= 16
            and ctx.n_targets <= 2
        )


@dataclass(frozen=True)
class CostBreakdown:
    """Per-robot suboptimality costs; ``obj`` entries are None when no exact
    oracle is available to compare the local approximation against."""

    dist: tuple
    plan: tuple
    obj: tuple
    plan_se: tuple

    @property
    def total_dist(self):
        return float(sum(self.dist))

    @property
    def total_plan(self):
        return float(sum(self.plan))

    @property
    def total_obj(self):
        vals = [v for v in self.obj if v is not None]
        return float(sum(vals)) if vals else 0.0

    @property
    def obj_computed(self):
        return all(v is not None for v in self.obj)

    @property
    def total(self):
        return self.total_dist + self.total_plan + self.total_obj


def _full_evaluator(instance: PlanningInstance, m_ref: int):
    if instance.exact_feasible():
        return ExactObjectiveOracle(instance.ctx.with_scope(None)), None
    return RolloutEvaluator(instance.ctx.with_scope(None)), range(m_ref)


def _scoped_evaluator(instance: PlanningInstance, scope, m_ref: int):
    ctx = instance.ctx.with_scope(scope)
    if instance.exact_feasible():
        return ExactObjectiveOracle(ctx), None
    return RolloutEvaluator(ctx), range(m_ref)


def compute_costs(
    instance_or_record, m_ref: int = None
) -> CostBreakdown:
    """Per-robot distributed / planner / objective costs of a frozen epoch.

    The distributed cost is how much conditioning the robot lost by ignoring
    predecessors; the planner cost is the gap to its best local action under
    its own (scoped) objective; the objective cost bounds how far the scoped
    objective strays from the full one, and is only computed when the exact
    oracle applies.
    """
    if isinstance(instance_or_record, SubproblemRecord):
        instance_or_record.check_integrity()
        instance = PlanningInstance.from_record(instance_or_record)
    else:
        instance = instance_or_record
    if m_ref is None:
        m_ref = instance.ctx.samples
    full, samples = _full_evaluator(instance, m_ref)
    blocks = action_blocks(instance.ctx)

    dist, plan, obj, plan_se = [], [], [], []
    for i in range(instance.n_r):
        x_i = instance.decisions[i]
        received = instance.received(i)
        preceding = instance.preceding(i)
        gain_received = full.gain(x_i, received, samples)
        gain_preceding = full.gain(x_i, preceding, samples)
        dist.append(gain_received - gain_preceding)

        scoped, s_samples = _scoped_evaluator(instance, instance.scopes[i], m_ref)
        local_gains = {
            a: scoped.gain(a, received, s_samples) for a in blocks[i]
        }
        best_action = blocks[i][0]
        for a in blocks[i][1:]:  # blocks are lexicographic; strict > keeps first
            if local_gains[a] > local_gains[best_action]:
                best_action = a
        plan.append(local_gains[best_action] - local_gains[x_i])
        _, se = scoped.gain_with_se(best_action, received, s_samples)
        plan_se.append(se)

        if instance.exact_feasible():
            over = max(
                local_gains[a] - full.gain(a, received, samples) for a in blocks[i]
            )
            under = max(
                full.gain(a, received, samples) - local_gains[a] for a in blocks[i]
            )
            obj.append(over + under)
        else:
            obj.append(None)
    return CostBreakdown(
        dist=tuple(dist), plan=tuple(plan), obj=tuple(obj), plan_se=tuple(plan_se)
    )


def gamma_general(instance: PlanningInstance, i: int, evaluator, samples) -> float:
    """Cost of robot i's decision against the best conditional gain given
    all preceding decisions."""
    preceding = instance.preceding(i)
    blocks = action_blocks(instance.ctx)
    best = max(evaluator.gain(a, preceding, samples) for a in blocks[i])
    return best - evaluator.gain(instance.decisions[i], preceding, samples)


# ---------------------------------------------------------------------------
# bound verification


@dataclass(frozen=True)
class BoundReport:
    holds: bool
    slack: float  # rhs - lhs; negative means violated
    lhs: float
    rhs: float


@dataclass(frozen=True)
class DistributedBoundReport:
    costs_bound: BoundReport  # optimum vs 2x value + total costs
    weights_bound: BoundReport  # total distributed cost vs ignored-pair weights

    @property
    def holds(self):
        return self.costs_bound.holds and self.weights_bound.holds


def _require_exact(instance: PlanningInstance):
    if not instance.exact_feasible():
        raise ValueError(
            "bound verification requires a tiny exact instance "
            "(discrete sensor, horizon 1, <=16 cells, <=2 targets)"
        )


def optimum_value(instance: PlanningInstance) -> float:
    _require_exact(instance)
    oracle = ExactObjectiveOracle(instance.ctx.with_scope(None))
    _, value = brute_force_optimum(oracle, build_matroid(instance.ctx))
    return value


def verify_assignment_bound(
    instance_or_record, optimum: float = None, tol: float = EXACT_TOL
) -> BoundReport:
    """General-assignment bound: optimum <= 2 * achieved + total general
    cost, for any basis."""
    instance = (
        PlanningInstance.from_record(instance_or_record)
        if isinstance(instance_or_record, SubproblemRecord)
        else instance_or_record
    )
    _require_exact(instance)
    oracle = ExactObjectiveOracle(instance.ctx.with_scope(None))
    if optimum is None:
        optimum = optimum_value(instance)
    gen_total = sum(
        gamma_general(instance, i, oracle, None) for i in range(instance.n_r)
    )
    lhs = optimum
    rhs = 2.0 * oracle.evaluate(instance.selection) + gen_total
    return BoundReport(holds=lhs <= rhs + tol, slack=rhs - lhs, lhs=lhs, rhs=rhs)


def verify_distributed_bound(
    instance_or_record,
    optimum: float = None,
    weights: WeightMatrix = None,
    tol: float = EXACT_TOL,
) -> DistributedBoundReport:
    """Distributed-planning bound: the cost decomposition dominates the
    optimality gap, and capacity weights dominate the distributed cost."""
    instance = (
        PlanningInstance.from_record(instance_or_record)
        if isinstance(instance_or_record, SubproblemRecord)
        else instance_or_record
    )
    _require_exact(instance)
    oracle = ExactObjectiveOracle(instance.ctx.with_scope(None))
    if optimum is None:
        optimum = optimum_value(instance)
    costs = compute_costs(instance)

    lhs1 = optimum
    rhs1 = 2.0 * oracle.evaluate(instance.selection) + costs.total
    costs_bound = BoundReport(
        holds=lhs1 <= rhs1 + tol, slack=rhs1 - lhs1, lhs=lhs1, rhs=rhs1
    )

    if weights is None:
        caps = capacity_matrix(instance.ctx, exact=True)
        weights = weight_hat(caps)
    redundancy = total_redundancy(weights, instance.graph)
    lhs2 = costs.total_dist
    rhs2 = redundancy.ignored_pair_sum
    weights_bound = BoundReport(
        holds=lhs2 <= rhs2 + tol, slack=rhs2 - lhs2, lhs=lhs2, rhs=rhs2
    )
    return DistributedBoundReport(costs_bound=costs_bound, weights_bound=weights_bound)


def chain_weight_bound(
    instance: PlanningInstance, weights: WeightMatrix, i: int
) -> BoundReport:
    """Per-robot version of the weights bound: the redundancy between robot
    i's decision and all ignored decisions is dominated by the sum of its
    ignored-pair weights."""
    _require_exact(instance)
    oracle = ExactObjectiveOracle(instance.ctx.with_scope(None))
    ignored = sorted(instance.graph.ignored(i))
    lhs = -second_derivative(
        oracle,
        Selection([instance.decisions[i]]),
        Selection(instance.decisions[j] for j in ignored),
        instance.received(i),
    )
    rhs = sum(weights[i, j] for j in ignored)
    return BoundReport(
        holds=lhs <= rhs + EXACT_TOL, slack=rhs - lhs, lhs=lhs, rhs=rhs
    )


def derivative_lower_bounds(oracle: ExactObjectiveOracle, a, b, x):
    """The second derivative alongside its two lower bounds: the
    min-of-values bound and the per-target component bound."""
    d = second_derivative(oracle, a, b, x)
    min_bound = -min(oracle.evaluate(a), oracle.evaluate(b))
    comp = -float(
        np.minimum(oracle.per_target(a), oracle.per_target(b)).sum()
    )
    return d, min_bound, comp
