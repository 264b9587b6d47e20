"""Planner graphs, RSP round assignment, range limits, and the distributed
executor's structural contracts."""

import numpy as np
import pytest

from swarmtrack.coordination import (
    CoordinationMethod,
    DecisionMessage,
    PlannerGraph,
    PlanningSetup,
    _plan_robot,
    apply_range_limits,
    build_empty_graph,
    build_graph_for_method,
    build_sequential_graph,
    rsp_assign,
    run_distributed_plan,
    run_myopic,
    run_random,
    run_sequential_greedy,
)
from swarmtrack.objective import DiscreteSensorModel
from swarmtrack.sensing import HistogramFilter, RangeSensorModel
from swarmtrack.submodular import Action, Selection
from swarmtrack.world import Grid, MotionKernel, WorldState

from conftest import tiny_exact_context, world_from_context


def make_world(seed=3, n_r=3, n_t=3, side=6):
    rng = np.random.default_rng(seed)
    grid = Grid(side)
    kern = MotionKernel(grid)
    filters = tuple(
        HistogramFilter.point_mass(
            grid, (int(rng.integers(side)), int(rng.integers(side)))
        ).predict(kern)
        for _ in range(n_t)
    )
    return WorldState(
        time=0,
        grid=grid,
        robot_positions=tuple(
            (int(rng.integers(side)), int(rng.integers(side))) for _ in range(n_r)
        ),
        target_positions=tuple(
            (int(rng.integers(side)), int(rng.integers(side))) for _ in range(n_t)
        ),
        filters=filters,
    )


def sampled_setup(kern, planner="exhaustive", m_ref=8):
    return PlanningSetup(
        horizon=2, sensor=RangeSensorModel(), kernel=kern,
        planner=planner, m_ref=m_ref,
    )


class TestGraphs:
    @pytest.mark.parametrize("n_r,edges", [(4, 6), (1, 0), (96, 4560)])
    def test_sequential_edge_count(self, n_r, edges):
        g = build_sequential_graph(n_r)
        assert g.edge_count == edges
        assert g.n_sequential_steps == n_r

    def test_sequential_in_neighbors_are_all_predecessors(self):
        g = build_sequential_graph(5)
        for i in range(5):
            assert g.in_neighbors[i] == frozenset(range(i))
            assert g.ignored(i) == frozenset()

    def test_rejects_same_round_edges(self):
        with pytest.raises(ValueError):
            PlannerGraph(n_r=2, rounds=(0, 0), in_neighbors=(frozenset(), {0}))

    def test_rsp_single_round_has_no_edges(self):
        g = rsp_assign(5, 1, np.random.default_rng(0))
        assert g.edge_count == 0
        assert g.n_sequential_steps == 1
        # everything before you in the order is ignored
        assert g.ignored(4) == frozenset(range(4))

    def test_rsp_distinct_rounds_isomorphic_to_sequential(self):
        rng = np.random.default_rng(0)
        while True:  # condition the draw on all-distinct rounds
            g = rsp_assign(4, 4, rng)
            if len(set(g.rounds)) == 4:
                break
        order = g.order()
        for pos, robot in enumerate(order):
            assert g.in_neighbors[robot] == frozenset(order[:pos])

    def test_rsp_round_occupancy_expectation(self):
        n_r, n_d, draws = 12, 4, 10_000
        rng = np.random.default_rng(7)
        counts = np.zeros(n_d)
        for _ in range(draws):
            g = rsp_assign(n_r, n_d, rng)
            for r in g.rounds:
                counts[r] += 1
        occupancy = counts / draws
        assert np.all(np.abs(occupancy - n_r / n_d) < 0.02 * n_r)

    def test_rsp_expected_edge_count(self):
        n_r, n_d, draws = 10, 4, 4000
        rng = np.random.default_rng(8)
        edges = [rsp_assign(n_r, n_d, rng).edge_count for _ in range(draws)]
        expected = n_r * (n_r - 1) / 2 * (1 - 1 / n_d)
        se = np.std(edges, ddof=1) / np.sqrt(draws)
        assert abs(np.mean(edges) - expected) < 4 * se

    def test_sequential_steps_bounded_by_n_d(self):
        rng = np.random.default_rng(9)
        for n_r in (3, 10, 40):
            for n_d in (1, 2, 4, 8):
                g = rsp_assign(n_r, n_d, rng)
                assert g.n_sequential_steps <= n_d


class TestRangeLimits:
    def test_infinite_ranges_change_nothing(self):
        world = make_world()
        g = build_sequential_graph(3)
        limited, scopes = apply_range_limits(g, world, np.inf, np.inf)
        assert limited.in_neighbors == g.in_neighbors
        assert all(len(s) == world.n_targets for s in scopes)

    def test_far_robots_lose_edges(self):
        grid = Grid(30)
        f = HistogramFilter.point_mass(grid, (0, 0))
        world = WorldState(
            time=0, grid=grid,
            robot_positions=((0, 0), (25, 0)),
            target_positions=((0, 0),),
            filters=(f,),
        )
        g = build_sequential_graph(2)
        limited, _ = apply_range_limits(g, world, robot_range=20.0, target_range=12.0)
        assert limited.in_neighbors[1] == frozenset()
        # the dropped predecessor moves to the ignored set
        assert limited.ignored(1) == frozenset({0})

    def test_empty_scope_falls_back_to_lexicographic(self):
        ctx = tiny_exact_context(5, n_r=1)
        world = world_from_context(ctx)
        setup = PlanningSetup(
            horizon=1, sensor=ctx.sensor, kernel=ctx.kernel,
            planner="exhaustive", exact=True,
        )
        action = _plan_robot(world, setup, 0, Selection(), (), 0, 123)
        assert action == Action(0, (0,))

    def test_scopes_reflect_filter_mean_distance(self):
        grid = Grid(30)
        near = HistogramFilter.point_mass(grid, (1, 1))
        far = HistogramFilter.point_mass(grid, (28, 28))
        world = WorldState(
            time=0, grid=grid, robot_positions=((0, 0),),
            target_positions=((1, 1), (28, 28)), filters=(near, far),
        )
        _, scopes = apply_range_limits(
            build_empty_graph(1), world, robot_range=20.0, target_range=12.0
        )
        assert scopes[0] == (0,)


class TestExecutor:
    def test_message_count_equals_edge_count(self):
        world = make_world()
        setup = sampled_setup(MotionKernel(world.grid))
        g = build_sequential_graph(3)
        res = run_distributed_plan(g, world, setup, epoch=0, trial_seed=5)
        assert res.message_count == g.edge_count
        senders = sorted(m.sender for m in res.messages)
        expected = sorted(j for i in range(3) for j in g.in_neighbors[i])
        assert senders == expected

    def test_messages_have_constant_size(self):
        world = make_world(n_r=4)
        setup = sampled_setup(MotionKernel(world.grid))
        g = build_sequential_graph(4)
        res = run_distributed_plan(g, world, setup, epoch=0, trial_seed=5)
        sizes = {len(m.to_bytes()) for m in res.messages}
        assert len(sizes) == 1

    def test_within_round_order_invariance(self):
        """Decisions do not depend on the order robots in a round are
        executed: planning each robot directly from the frozen inputs gives
        the same actions."""
        world = make_world(n_r=4)
        setup = sampled_setup(MotionKernel(world.grid))
        g = PlannerGraph(
            n_r=4, rounds=(0, 0, 1, 1),
            in_neighbors=(frozenset(), frozenset(), {0, 1}, {0, 1}),
        )
        res = run_distributed_plan(g, world, setup, epoch=2, trial_seed=9)
        # replan round-1 robots in reverse order from the same inputs
        received = Selection([res.decisions[0], res.decisions[1]])
        for robot in (3, 2):
            again = _plan_robot(world, setup, robot, received, None, 2, 9)
            assert again == res.decisions[robot]

    def test_selection_is_matroid_basis(self):
        world = make_world(n_r=4)
        setup = sampled_setup(MotionKernel(world.grid))
        for method in ("sequential", "rsp2", "myopic"):
            graph, scopes = build_graph_for_method(
                CoordinationMethod.parse(method), world, 0, 11
            )
            res = run_distributed_plan(graph, world, setup, 0, 11, scopes)
            assert sorted(a.robot_id for a in res.selection) == list(range(4))

    def test_sequential_graph_equals_sequential_greedy(self):
        world = make_world(n_r=3)
        setup = sampled_setup(MotionKernel(world.grid))
        res = run_distributed_plan(
            build_sequential_graph(3), world, setup, epoch=4, trial_seed=21
        )
        greedy = run_sequential_greedy(world, setup, epoch=4, trial_seed=21)
        assert res.selection == greedy

    def test_rsp1_equals_myopic(self):
        world = make_world(n_r=3)
        setup = sampled_setup(MotionKernel(world.grid))
        graph, _ = build_graph_for_method(
            CoordinationMethod("rsp", n_d=1), world, 4, 21
        )
        res = run_distributed_plan(graph, world, setup, epoch=4, trial_seed=21)
        assert res.selection == run_myopic(world, setup, epoch=4, trial_seed=21)

    def test_random_is_feasible_and_reproducible(self):
        world = make_world(n_r=5)
        a = run_random(world, 2, epoch=1, trial_seed=3)
        b = run_random(world, 2, epoch=1, trial_seed=3)
        assert a == b
        assert sorted(x.robot_id for x in a) == list(range(5))

    def test_rounds_redraw_per_epoch_but_fixable(self):
        world = make_world(n_r=6)
        m_redraw = CoordinationMethod("rsp", n_d=3)
        g1, _ = build_graph_for_method(m_redraw, world, 0, 7)
        g2, _ = build_graph_for_method(m_redraw, world, 1, 7)
        assert g1.rounds != g2.rounds  # overwhelmingly likely under redraw
        m_fixed = CoordinationMethod("rsp", n_d=3, redraw_rounds=False)
        g3, _ = build_graph_for_method(m_fixed, world, 0, 7)
        g4, _ = build_graph_for_method(m_fixed, world, 1, 7)
        assert g3.rounds == g4.rounds


class TestZeroInteraction:
    def test_sequential_equals_myopic_when_footprints_disjoint(self):
        """Targets sensed by exactly one robot each: conditioning changes
        nothing, and the pairwise weight is exactly zero."""
        from swarmtrack.bounds import weight_hat
        from swarmtrack.objective import ObjectiveContext, capacity_matrix

        grid = Grid(4)
        near_a = HistogramFilter.from_cell_probs(grid, {(0, 0): 0.5, (0, 1): 0.5})
        near_b = HistogramFilter.from_cell_probs(grid, {(3, 3): 0.5, (3, 2): 0.5})
        sensor = DiscreteSensorModel(range_scale=1.5)  # flat beyond ~1.35 cells
        ctx = ObjectiveContext(
            grid=grid, robot_positions=((0, 0), (3, 3)),
            filters=(near_a, near_b), horizon=1, sensor=sensor,
            kernel=None, seed=0,
        )
        world = WorldState(
            time=0, grid=grid, robot_positions=ctx.robot_positions,
            target_positions=((0, 0), (3, 3)), filters=ctx.filters,
        )
        caps = capacity_matrix(ctx, exact=True)
        w = weight_hat(caps)
        assert w[0, 1] == pytest.approx(0.0, abs=1e-12)

        setup = PlanningSetup(
            horizon=1, sensor=sensor, kernel=None,
            planner="exhaustive", exact=True,
        )
        seq = run_sequential_greedy(world, setup, epoch=0, trial_seed=13)
        myo = run_myopic(world, setup, epoch=0, trial_seed=13)
        assert seq == myo


class TestMethodParsing:
    def test_labels(self):
        assert CoordinationMethod.parse("rsp4").label == "rsp4"
        assert CoordinationMethod.parse("rrsp2").label == "rrsp2"
        assert CoordinationMethod.parse("sequential").label == "sequential"

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            CoordinationMethod.parse("banana")

    def test_decision_message_bytes(self):
        m = DecisionMessage(sender=3, action=Action(3, (1, 4)), epoch=17)
        assert len(m.to_bytes()) == 12 + 2
