"""Mutual-information objective: sampled rollout estimator, per-target
decomposition, channel capacities, and an exact tiny-instance oracle.

The planning objective is the per-step sum of mutual information between
target states and the observations induced by a set of actions. The sampled
estimator simulates target motion and observations, running the Bayes
filters forward and accumulating predictive-entropy minus posterior-entropy
at every step. The exact oracle replaces the range sensor with a finite
discrete sensor and enumerates all target transitions and joint observation
outcomes, which makes the submodularity/bound machinery exactly testable on
small instances.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels, seeding
from .sensing import (
    DegenerateUpdateError,
    RangeSensorModel,
    cell_distances,
)
from .submodular import (
    Action,
    EnumerationLimitError,
    Selection,
    SetFunctionOracle,
)
from .world import Grid, enumerate_trajectories, robot_path

_TRAJ_TAG = 101
_NOISE_TAG = 102
_RNG_BLOCK = 16  # samples drawn per generator construction (amortizes setup)

EXACT_MAX_CELLS = 16
EXACT_MAX_TARGETS = 2
EXACT_COST_CAP = 10**7


@dataclass(frozen=True)
class DiscreteSensorModel:
    """Binary detection sensor with range-dependent hit probability.

    Default detection probability is max(floor, 1 - d / range_scale); pass
    ``prob_fn`` (distance -> probability) to override, e.g. a perfectly
    discriminating sensor for hand-checkable tests.
    """

    range_scale: float = 4.0
    floor: float = 0.1
    prob_fn: object = None

    is_discrete = True

    def detection_prob(self, distance: float) -> float:
        if self.prob_fn is not None:
            p = float(self.prob_fn(distance))
        else:
            p = max(self.floor, 1.0 - distance / self.range_scale)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"detection probability {p} outside [0, 1]")
        return p

    def detection_probs(self, robot_cell, grid: Grid):
        return _detection_probs_cached(self, robot_cell, grid.side)

    def likelihood_grid(self, y: float, robot_cell, grid: Grid):
        p = self.detection_probs(robot_cell, grid)
        return p if y >= 0.5 else 1.0 - p


@lru_cache(maxsize=8192)
def _detection_probs_cached(model, robot_cell, side):
    grid = Grid(side)
    dists = cell_distances(grid, robot_cell)
    probs = np.array([model.detection_prob(d) for d in dists])
    probs.setflags(write=False)
    return probs


@dataclass(frozen=True)
class ObjectiveContext:
    """Frozen planning-time inputs for objective evaluation.

    ``kernel=None`` means static targets (no motion between steps), used by
    hand-checkable tests. ``target_scope=None`` evaluates all targets;
    a tuple of indices restricts to those targets (the range-limited local
    objective drops distant ones).
    """

    grid: Grid
    robot_positions: tuple
    filters: tuple
    horizon: int = 1
    samples: int = 32
    seed: int = 0
    sensor: object = field(default_factory=RangeSensorModel)
    kernel: object = None
    target_scope: tuple = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.target_scope is not None:
            scope = tuple(sorted(self.target_scope))
            if any(j < 0 or j >= len(self.filters) for j in scope):
                raise ValueError("target scope outside target set")
            object.__setattr__(self, "target_scope", scope)

    @property
    def n_targets(self):
        return len(self.filters)

    @property
    def scope(self):
        return self.target_scope if self.target_scope is not None else tuple(
            range(self.n_targets)
        )

    def with_scope(self, scope):
        return replace(self, target_scope=tuple(scope) if scope is not None else None)

    def with_seed(self, seed):
        return replace(self, seed=seed)


class RolloutEvaluator:
    """Monte Carlo objective evaluation with common random numbers.

    Sample paths (target trajectories and per-robot observation noise) are
    derived from the context seed and the sample index only, so evaluating
    different selections against the same samples yields paired estimates:
    marginal gains are differences of values computed on identical rollouts.
    """

    def __init__(self, ctx: ObjectiveContext):
        self.ctx = ctx
        self.grid = ctx.grid
        self.scope = ctx.scope
        self._traj = {}
        self._noise = {}
        self._values = {}
        self._paths = {}
        self._cdfs = [np.cumsum(f.probs) for f in ctx.filters]
        # initial nonzero-cell indices per scope target (padded), for the
        # sparse-support rollout kernels
        n_cells = ctx.grid.n_cells
        self._support = np.zeros((len(self.scope), n_cells), dtype=np.int64)
        self._support_len = np.zeros(len(self.scope), dtype=np.int64)
        for jl, j in enumerate(self.scope):
            (nz,) = np.nonzero(ctx.filters[j].probs)
            self._support[jl, : len(nz)] = nz
            self._support_len[jl] = len(nz)

    # -- sample-path generation ----------------------------------------

    def _trajectory(self, s: int):
        """True target cell indices for sample s, shape (horizon + 1,
        n_targets). All targets are drawn regardless of scope so scoping
        never shifts the stream."""
        cached = self._traj.get(s)
        if cached is not None:
            return cached
        ctx = self.ctx
        block, offset = divmod(s, _RNG_BLOCK)
        draws_block = self._traj.get(("block", block))
        if draws_block is None:
            rng = seeding.generator(ctx.seed, _TRAJ_TAG, block)
            draws_block = rng.random((_RNG_BLOCK, ctx.horizon + 1, ctx.n_targets))
            self._traj[("block", block)] = draws_block
        draws = draws_block[offset]
        n_t = ctx.n_targets
        cells = np.empty((ctx.horizon + 1, n_t), dtype=np.int64)
        for j in range(n_t):
            cdf = self._cdfs[j]
            idx = int(np.searchsorted(cdf, draws[0, j] * cdf[-1], side="right"))
            cells[0, j] = min(idx, len(cdf) - 1)
        kern = ctx.kernel
        for k in range(1, ctx.horizon + 1):
            if kern is None:
                cells[k] = cells[k - 1]
            else:
                for j in range(n_t):
                    cur = cells[k - 1, j]
                    cnt = kern.neighbor_count[cur]
                    pick = min(int(draws[k, j] * cnt), cnt - 1)
                    cells[k, j] = kern.neighbor_index[cur, pick]
        self._traj[s] = cells
        return cells

    def _noise_block(self, s: int, robot_id: int, slot: int):
        """Observation noise for one robot's action channel: standard
        normals (continuous sensor) and uniforms (discrete sensor), shape
        (horizon, n_targets)."""
        block, offset = divmod(s, _RNG_BLOCK)
        key = (block, robot_id, slot)
        cached = self._noise.get(key)
        if cached is None:
            ctx = self.ctx
            rng = seeding.generator(ctx.seed, _NOISE_TAG, robot_id, slot, block)
            z = rng.standard_normal((_RNG_BLOCK, ctx.horizon, ctx.n_targets))
            u = rng.random((_RNG_BLOCK, ctx.horizon, ctx.n_targets))
            cached = (z, u)
            self._noise[key] = cached
        return cached[0][offset], cached[1][offset]

    # -- rollout -------------------------------------------------------

    def _action_path(self, action: Action):
        """Cached per-step positions for one action: list of cells plus the
        (horizon,) x and y coordinate arrays."""
        cached = self._paths.get(action)
        if cached is None:
            cells = robot_path(
                self.ctx.robot_positions[action.robot_id], action.controls, self.grid
            )
            xs = np.array([float(c[0]) for c in cells])
            ys = np.array([float(c[1]) for c in cells])
            cached = (cells, xs, ys)
            self._paths[action] = cached
        return cached

    def _gather_paths(self, actions: tuple, s: int):
        """(robot path, noise block) per action; same-robot duplicates get
        fresh noise slots so their observation noise stays independent."""
        paths = []
        slots = {}
        for a in actions:
            slot = slots.get(a.robot_id, 0)
            slots[a.robot_id] = slot + 1
            noise = self._noise_block(s, a.robot_id, slot)
            paths.append((self._action_path(a), noise))
        return paths

    def _rollout(self, actions: tuple, s: int):
        """Per-scope-target entropy-reduction sums for one sample.

        Parametric sensors run through the fused per-step kernels; sensors
        with custom probability callables take the filter-object reference
        path (the two are asserted equivalent in the test suite).
        """
        sensor = self.ctx.sensor
        fused = isinstance(sensor, RangeSensorModel) or (
            isinstance(sensor, DiscreteSensorModel) and sensor.prob_fn is None
        )
        if fused:
            return self._rollout_fused(actions, s)
        return self._rollout_reference(actions, s)

    def _rollout_fused(self, actions: tuple, s: int):
        ctx = self.ctx
        sensor = ctx.sensor
        discrete = getattr(sensor, "is_discrete", False)
        grid = self.grid
        traj = self._trajectory(s)
        paths = self._gather_paths(actions, s)

        kern = ctx.kernel
        do_predict = kern is not None
        if do_predict:
            nbr_idx, nbr_cnt = kern.neighbor_index, kern.neighbor_count
        else:
            nbr_idx = np.zeros((1, 1), dtype=np.int64)
            nbr_cnt = np.ones(1, dtype=np.int64)

        n_a, horizon = len(paths), ctx.horizon
        full_scope = len(self.scope) == ctx.n_targets
        scope_cols = list(self.scope)
        rx = np.empty((horizon, n_a))
        ry = np.empty((horizon, n_a))
        noise = np.empty((horizon, n_a, len(scope_cols)))
        for ai, ((_, pxs, pys), (z, u)) in enumerate(paths):
            rx[:, ai] = pxs
            ry[:, ai] = pys
            block = u if discrete else z
            noise[:, ai, :] = block if full_scope else block[:, scope_cols]
        scope_traj = traj[1:] if full_scope else traj[1:, scope_cols]
        tcx = self.grid.xs[scope_traj]
        tcy = self.grid.ys[scope_traj]

        probs = np.stack([ctx.filters[j].probs for j in self.scope])
        thresholds = np.array(
            [ctx.filters[j].sparse_threshold for j in self.scope]
        )
        if discrete:
            return kernels.rollout_discrete(
                probs, thresholds, nbr_idx, nbr_cnt, do_predict,
                grid.xs, grid.ys, rx, ry, noise, tcx, tcy,
                sensor.floor, sensor.range_scale,
                self._support, self._support_len,
            )
        return kernels.rollout_range(
            probs, thresholds, nbr_idx, nbr_cnt, do_predict,
            grid.xs, grid.ys, rx, ry, noise, tcx, tcy,
            sensor.saturation, sensor.var_base, sensor.var_scale,
            self._support, self._support_len,
        )

    def _rollout_reference(self, actions: tuple, s: int):
        ctx = self.ctx
        sensor = ctx.sensor
        discrete = getattr(sensor, "is_discrete", False)
        traj = self._trajectory(s)
        paths = self._gather_paths(actions, s)

        filters = [ctx.filters[j] for j in self.scope]
        contrib = np.zeros(len(self.scope))
        for k in range(1, ctx.horizon + 1):
            for jl, j in enumerate(self.scope):
                f = filters[jl]
                if ctx.kernel is not None:
                    f = f.predict(ctx.kernel)
                h_pred = f.entropy()
                true_cell = self.grid.index_cell(int(traj[k, j]))
                for (cells, _, _), (z, u) in paths:
                    pos = cells[k - 1]
                    if discrete:
                        p_hit = sensor.detection_prob(
                            math.hypot(pos[0] - true_cell[0], pos[1] - true_cell[1])
                        )
                        y = 1.0 if u[k - 1, j] < p_hit else 0.0
                        lik = sensor.likelihood_grid(y, pos, self.grid)
                    else:
                        mean, var = sensor.mean_var(
                            math.hypot(pos[0] - true_cell[0], pos[1] - true_cell[1])
                        )
                        y = mean + math.sqrt(var) * z[k - 1, j]
                        lik = sensor.likelihood_grid(y, pos, self.grid)
                    try:
                        f = f.updated_with_likelihood(lik)
                    except DegenerateUpdateError:
                        pass  # keep the prior; the observation carried no usable mass
                contrib[jl] += h_pred - f.entropy()
                filters[jl] = f
        return contrib

    def _values_for(self, selection: Selection, s: int):
        key = (selection.actions, s)
        cached = self._values.get(key)
        if cached is None:
            if len(selection) == 0:
                cached = np.zeros(len(self.scope))
            else:
                cached = self._rollout(selection.actions, s)
            cached.setflags(write=False)
            self._values[key] = cached
        return cached

    # -- public API ------------------------------------------------------

    def sample_matrix(self, selection: Selection, samples) -> np.ndarray:
        """(n_samples, n_scope_targets) per-sample per-target values."""
        return np.array([self._values_for(selection, s) for s in samples])

    def per_target(self, selection: Selection, samples=None) -> np.ndarray:
        samples = range(self.ctx.samples) if samples is None else samples
        return self.sample_matrix(selection, samples).mean(axis=0)

    def value(self, selection: Selection, samples=None) -> float:
        """Objective estimate: per-sample target sums averaged over samples."""
        if len(selection) == 0:
            return 0.0
        return float(np.sum(self.per_target(selection, samples)))

    def value_with_se(self, selection: Selection, samples=None):
        samples = range(self.ctx.samples) if samples is None else samples
        totals = self.sample_matrix(selection, samples).sum(axis=1)
        n = len(totals)
        se = float(totals.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
        return float(totals.mean()), se

    def gain(self, action: Action, prior: Selection, samples=None) -> float:
        samples = range(self.ctx.samples) if samples is None else samples
        with_x = prior.add(action)
        total = 0.0
        n = 0
        for s in samples:
            total += self._values_for(with_x, s).sum() - self._values_for(prior, s).sum()
            n += 1
        return total / n

    def gain_with_se(self, action: Action, prior: Selection, samples=None):
        """Paired marginal-gain estimate; the SE reflects the common-random-
        number pairing, not the two marginal variances."""
        samples = range(self.ctx.samples) if samples is None else samples
        with_x = self.sample_matrix(prior.add(action), samples).sum(axis=1)
        without = self.sample_matrix(prior, samples).sum(axis=1)
        diffs = with_x - without
        n = len(diffs)
        se = float(diffs.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
        return float(diffs.mean()), se


# ---------------------------------------------------------------------------
# exact oracle


class ExactObjectiveOracle(SetFunctionOracle):
    """Exact mutual information on tiny single-step instances by full
    enumeration of target transitions and joint discrete observations."""

    def __init__(self, ctx: ObjectiveContext, cost_cap: int = EXACT_COST_CAP):
        if not getattr(ctx.sensor, "is_discrete", False):
            raise ValueError("exact evaluation requires a discrete sensor")
        if ctx.horizon != 1:
            raise ValueError("exact evaluation supports horizon 1 only")
        if ctx.grid.n_cells > EXACT_MAX_CELLS:
            raise EnumerationLimitError(
                f"exact oracle limited to {EXACT_MAX_CELLS} cells, "
                f"got {ctx.grid.n_cells}"
            )
        if ctx.n_targets > EXACT_MAX_TARGETS:
            raise EnumerationLimitError(
                f"exact oracle limited to {EXACT_MAX_TARGETS} targets, "
                f"got {ctx.n_targets}"
            )
        self.ctx = ctx
        self.cost_cap = cost_cap
        self._memo = {}
        self._predicted = []
        for f in ctx.filters:
            self._predicted.append(
                f.predict(ctx.kernel).probs if ctx.kernel is not None else f.probs
            )

    def _check_cost(self, n_actions):
        cost = (1 << n_actions) * self.ctx.grid.n_cells * self.ctx.n_targets
        if cost > self.cost_cap:
            raise EnumerationLimitError(
                f"joint-observation enumeration cost {cost} exceeds cap "
                f"{self.cost_cap} ({n_actions} actions)"
            )

    def per_target(self, selection: Selection) -> np.ndarray:
        key = selection.actions
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        self._check_cost(len(key))
        ctx = self.ctx
        result = np.zeros(len(ctx.scope))
        if len(key) > 0:
            hit_probs = []
            for a in key:
                pos = robot_path(ctx.robot_positions[a.robot_id], a.controls, ctx.grid)[0]
                hit_probs.append(ctx.sensor.detection_probs(pos, ctx.grid))
            for jl, j in enumerate(ctx.scope):
                result[jl] = _exact_mi_single_target(self._predicted[j], hit_probs)
        result.setflags(write=False)
        self._memo[key] = result
        return result

    def evaluate(self, selection: Selection) -> float:
        return float(np.sum(self.per_target(selection)))

    # evaluator-protocol compatibility with RolloutEvaluator
    def value(self, selection: Selection, samples=None) -> float:
        return self.evaluate(selection)

    def value_with_se(self, selection: Selection, samples=None):
        return self.evaluate(selection), 0.0

    def gain(self, action: Action, prior: Selection, samples=None) -> float:
        return self.evaluate(prior.add(action)) - self.evaluate(prior)

    def gain_with_se(self, action: Action, prior: Selection, samples=None):
        return self.gain(action, prior), 0.0

    def component(self, j: int) -> SetFunctionOracle:
        """The j-th summand of the target decomposition as its own oracle."""
        jl = self.ctx.scope.index(j)
        oracle = self

        class _Component(SetFunctionOracle):
            def evaluate(self, selection):
                return float(oracle.per_target(selection)[jl])

        return _Component()


def _exact_mi_single_target(prior: np.ndarray, hit_probs: list) -> float:
    """I(target cell; joint detections) in bits, by enumerating all 2**n
    joint outcomes of n conditionally independent binary channels."""
    lik = np.ones((1, prior.shape[0]))
    for p in hit_probs:
        lik = np.concatenate([lik * (1.0 - p), lik * p], axis=0)
    marg = lik @ prior
    joint = lik * prior[None, :]
    mask = joint > 0.0
    mi = np.sum(joint[mask] * np.log2(lik[mask] / marg[np.nonzero(mask)[0]]))
    return float(mi)


# ---------------------------------------------------------------------------
# module-level operations


def estimate_objective(selection: Selection, ctx: ObjectiveContext) -> float:
    """Sampled objective estimate (sum over in-scope targets, averaged over
    ``ctx.samples`` rollouts). The empty selection is exactly 0."""
    return RolloutEvaluator(ctx).value(selection)


def per_target_objective(selection: Selection, j: int, ctx: ObjectiveContext) -> float:
    """The j-th summand of the sampled estimate; summands share rollouts, so
    they add up to ``estimate_objective`` exactly."""
    if j not in ctx.scope:
        raise ValueError(f"target {j} not in scope {ctx.scope}")
    ev = RolloutEvaluator(ctx)
    return float(ev.per_target(selection)[ctx.scope.index(j)])


def exact_objective(selection: Selection, ctx: ObjectiveContext) -> float:
    """Exact MI on a tiny discrete-sensor instance (horizon 1)."""
    return ExactObjectiveOracle(ctx).evaluate(selection)


def channel_capacity(
    i: int,
    j: int,
    ctx: ObjectiveContext,
    m_cap: int = 64,
    exact: bool = False,
) -> float:
    """Best single-action information about target j achievable by robot i.

    The sampled version draws its rollouts from a fixed per-(i, j) stream so
    the capacity matrix is reproducible across the analysis pipeline.
    """
    best = -math.inf
    if exact:
        oracle = ExactObjectiveOracle(ctx.with_scope((j,)))
        for controls in enumerate_trajectories(ctx.robot_positions[i], ctx.horizon, ctx.grid):
            val = oracle.evaluate(Selection([Action(i, controls)]))
            best = max(best, val)
        return best
    pair_seed = seeding.stream_seed(ctx.seed, seeding.CAPACITY, i, j)
    ev = RolloutEvaluator(ctx.with_scope((j,)).with_seed(pair_seed))
    for controls in enumerate_trajectories(ctx.robot_positions[i], ctx.horizon, ctx.grid):
        val = ev.value(Selection([Action(i, controls)]), samples=range(m_cap))
        best = max(best, val)
    # capacities are nonnegative by definition; sampling noise around an
    # exactly-zero capacity must not leak through
    return max(best, 0.0)


def capacity_matrix(
    ctx: ObjectiveContext, m_cap: int = 64, exact: bool = False
) -> np.ndarray:
    """All robot-target channel capacities, shape (n_robots, n_targets)."""
    full = ctx.with_scope(None)
    n_r = len(ctx.robot_positions)
    out = np.zeros((n_r, ctx.n_targets))
    for i in range(n_r):
        for j in range(ctx.n_targets):
            out[i, j] = channel_capacity(i, j, full, m_cap=m_cap, exact=exact)
    return out


class ConditionalObjective:
    """One robot's planning view: marginal gain of its candidate
    trajectories conditioned on already-received decisions."""

    def __init__(self, evaluator, robot_id: int, prior: Selection):
        self.evaluator = evaluator
        self.robot_id = robot_id
        self.prior = prior

    @property
    def ctx(self):
        return self.evaluator.ctx

    @property
    def horizon(self):
        return self.ctx.horizon

    def action(self, controls) -> Action:
        return Action(self.robot_id, tuple(controls))

    def candidate_controls(self):
        ctx = self.ctx
        return enumerate_trajectories(
            ctx.robot_positions[self.robot_id], ctx.horizon, ctx.grid
        )

    def gain(self, controls, samples=None) -> float:
        return self.evaluator.gain(self.action(controls), self.prior, samples)

    def gain_with_se(self, controls, samples=None):
        return self.evaluator.gain_with_se(self.action(controls), self.prior, samples)
