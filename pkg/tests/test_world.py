"""Grid geometry, robot/target dynamics, and trajectory enumeration."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from swarmtrack.world import (
    EAST,
    NORTH,
    SOUTH,
    STAY,
    WEST,
    Grid,
    MotionKernel,
    WorldState,
    enumerate_trajectories,
    feasible_moves,
    grid_side,
    robot_path,
    step_robot,
    step_target,
)
from swarmtrack.sensing import HistogramFilter


class TestGridSide:
    @pytest.mark.parametrize("n_r,side", [(8, 10), (32, 20), (1, 4)])
    def test_values(self, n_r, side):
        assert grid_side(n_r) == side

    def test_rejects_empty_team(self):
        with pytest.raises(ValueError):
            grid_side(0)


class TestStepRobot:
    def test_north_moves_up(self):
        assert step_robot((0, 0), NORTH, Grid(4)) == (0, 1)

    def test_boundary_clamps_to_stay(self):
        assert step_robot((0, 0), WEST, Grid(4)) == (0, 0)
        assert step_robot((0, 0), SOUTH, Grid(4)) == (0, 0)
        assert step_robot((3, 3), EAST, Grid(4)) == (3, 3)

    def test_stay(self):
        assert step_robot((3, 3), STAY, Grid(5)) == (3, 3)

    def test_invalid_control(self):
        with pytest.raises(ValueError):
            step_robot((0, 0), 7, Grid(4))

    def test_pure_function(self):
        grid = Grid(5)
        assert all(
            step_robot((2, 2), u, grid) == step_robot((2, 2), u, grid)
            for u in range(5)
        )


class TestStepTarget:
    def test_interior_uniform_over_five(self):
        grid = Grid(5)
        rng = np.random.default_rng(0)
        counts = {}
        n = 100_000
        for _ in range(n):
            nxt = step_target((2, 2), grid, rng)
            counts[nxt] = counts.get(nxt, 0) + 1
        assert set(counts) == set(feasible_moves((2, 2), grid))
        assert len(counts) == 5
        _, p = stats.chisquare(list(counts.values()))
        assert p > 1e-4

    def test_corner_uniform_over_three(self):
        grid = Grid(5)
        rng = np.random.default_rng(1)
        counts = {}
        n = 100_000
        for _ in range(n):
            nxt = step_target((0, 0), grid, rng)
            counts[nxt] = counts.get(nxt, 0) + 1
        assert len(counts) == 3
        _, p = stats.chisquare(list(counts.values()))
        assert p > 1e-4

    def test_seeded_replay(self):
        grid = Grid(6)
        rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
        walk_a = walk_b = (3, 3)
        for _ in range(50):
            walk_a = step_target(walk_a, grid, rng_a)
            walk_b = step_target(walk_b, grid, rng_b)
            assert walk_a == walk_b


class TestEnumeration:
    def test_horizon_one_has_five(self):
        assert len(enumerate_trajectories((0, 0), 1, Grid(4))) == 5

    def test_two_step_horizon_has_25(self):
        assert len(enumerate_trajectories((0, 0), 2, Grid(4))) == 25

    def test_sorted_and_unique(self):
        seqs = enumerate_trajectories((2, 2), 3, Grid(6))
        assert len(seqs) == 125
        assert seqs == sorted(set(seqs))

    def test_rejects_zero_horizon(self):
        with pytest.raises(ValueError):
            enumerate_trajectories((0, 0), 0, Grid(4))


class TestMotionKernel:
    def test_columns_sum_to_one(self):
        kern = MotionKernel(Grid(5))
        sums = kern.matrix.sum(axis=0)
        assert np.allclose(sums, 1.0)

    def test_transition_probs_interior(self):
        kern = MotionKernel(Grid(5))
        probs = kern.transition_probs((2, 2))
        assert len(probs) == 5
        assert all(p == pytest.approx(0.2) for p in probs.values())

    def test_stencil_matches_matrix(self):
        grid = Grid(4)
        kern = MotionKernel(grid)
        for idx in range(grid.n_cells):
            cnt = kern.neighbor_count[idx]
            dests = kern.neighbor_index[idx, :cnt]
            col = kern.matrix[:, idx]
            assert np.isclose(col[dests].sum(), 1.0)
            assert cnt == np.count_nonzero(col)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(2, 8),
    st.lists(st.integers(0, 4), min_size=1, max_size=30),
    st.integers(0, 10_000),
)
def test_states_stay_in_bounds(side, controls, seed):
    grid = Grid(side)
    rng = np.random.default_rng(seed)
    robot = (int(rng.integers(side)), int(rng.integers(side)))
    target = robot
    for u in controls:
        robot = step_robot(robot, u, grid)
        target = step_target(target, grid, rng)
        assert grid.contains(robot) and grid.contains(target)


def test_robot_path_length_and_containment():
    grid = Grid(4)
    path = robot_path((0, 0), (NORTH, NORTH, EAST, SOUTH), grid)
    assert len(path) == 4
    assert all(grid.contains(c) for c in path)
    assert path == [(0, 1), (0, 2), (1, 2), (1, 1)]


def test_world_state_validation():
    grid = Grid(3)
    f = HistogramFilter.uniform(grid)
    with pytest.raises(ValueError):
        WorldState(0, grid, ((5, 5),), ((0, 0),), (f,))
    with pytest.raises(ValueError):
        WorldState(0, grid, ((0, 0),), ((0, 0), (1, 1)), (f,))
