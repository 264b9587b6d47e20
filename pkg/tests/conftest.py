"""Shared instance factories for the test suite."""

import numpy as np
import pytest

from swarmtrack.objective import DiscreteSensorModel, ObjectiveContext
from swarmtrack.sensing import HistogramFilter
from swarmtrack.world import Grid, MotionKernel, WorldState


def random_filter(grid, rng, concentration=3.0):
    """A random normalized histogram; higher concentration = peakier."""
    p = rng.random(grid.n_cells) ** concentration
    p /= p.sum()
    return HistogramFilter(grid, p)


def tiny_exact_context(
    seed,
    n_r=3,
    n_targets=2,
    side=4,
    moving=True,
    range_scale=4.0,
):
    """A random tiny instance on which the exact MI oracle applies:
    discrete sensor, horizon 1, at most 4x4 cells and 2 targets."""
    rng = np.random.default_rng(seed)
    grid = Grid(side)
    kernel = MotionKernel(grid) if moving else None
    positions = tuple(
        (int(rng.integers(side)), int(rng.integers(side))) for _ in range(n_r)
    )
    filters = tuple(random_filter(grid, rng) for _ in range(n_targets))
    return ObjectiveContext(
        grid=grid,
        robot_positions=positions,
        filters=filters,
        horizon=1,
        sensor=DiscreteSensorModel(range_scale=range_scale),
        kernel=kernel,
        seed=seed,
    )


def world_from_context(ctx: ObjectiveContext) -> WorldState:
    """WorldState snapshot matching a context (true target cells are
    irrelevant for planning; place them at filter argmax cells)."""
    grid = ctx.grid
    targets = tuple(
        grid.index_cell(int(np.argmax(f.probs))) for f in ctx.filters
    )
    return WorldState(
        time=0,
        grid=grid,
        robot_positions=ctx.robot_positions,
        target_positions=targets,
        filters=ctx.filters,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
