"""Square four-connected grid world, robot/target motion, and trajectory
enumeration.

Robots move deterministically under control symbols; targets random-walk
uniformly over their feasible moves. The grid side scales with the team so
that robot/target density stays constant across team sizes.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# control symbols, in lexicographic order
STAY, NORTH, SOUTH, EAST, WEST = range(5)
CONTROL_NAMES = ("stay", "N", "S", "E", "W")
MOVES = ((0, 0), (0, 1), (0, -1), (1, 0), (-1, 0))
N_CONTROLS = len(MOVES)

DENSITY_CELLS_PER_ROBOT = 12.5


def grid_side(n_r: int) -> int:
    """Side length of the square grid for a team of ``n_r`` robots."""
    if n_r < 1:
        raise ValueError(f"team size must be >= 1, got {n_r}")
    return math.ceil(math.sqrt(DENSITY_CELLS_PER_ROBOT * n_r))


@dataclass(frozen=True)
class Grid:
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("grid side must be positive")

    @property
    def n_cells(self) -> int:
        return self.side * self.side

    def contains(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.side and 0 <= y < self.side

    def cell_index(self, cell) -> int:
        x, y = cell
        return x * self.side + y

    def index_cell(self, index: int):
        return divmod(index, self.side)

    @cached_property
    def coordinates(self):
        """(n_cells, 2) float array of cell coordinates in index order."""
        xs, ys = np.divmod(np.arange(self.n_cells), self.side)
        return np.stack([xs, ys], axis=1).astype(float)

    @cached_property
    def xs(self):
        return np.ascontiguousarray(self.coordinates[:, 0])

    @cached_property
    def ys(self):
        return np.ascontiguousarray(self.coordinates[:, 1])


def step_robot(cell, control: int, grid: Grid):
    """Deterministic robot move; off-grid controls act as stay."""
    if not 0 <= control < N_CONTROLS:
        raise ValueError(f"invalid control symbol {control}")
    dx, dy = MOVES[control]
    nxt = (cell[0] + dx, cell[1] + dy)
    return nxt if grid.contains(nxt) else cell


def feasible_moves(cell, grid: Grid):
    """In-bounds destinations (stay first, then N/S/E/W order)."""
    out = []
    for dx, dy in MOVES:
        nxt = (cell[0] + dx, cell[1] + dy)
        if grid.contains(nxt):
            out.append(nxt)
    return out


def step_target(cell, grid: Grid, rng: np.random.Generator):
    """Random-walk move: uniform over the feasible destinations."""
    moves = feasible_moves(cell, grid)
    return moves[int(rng.integers(len(moves)))]


class MotionKernel:
    """The target random-walk transition kernel on a grid.

    Exposes a stencil form (per-cell feasible-destination lists) for the
    numba prediction kernel and a dense column-stochastic matrix for the
    numpy path; rows renormalize implicitly because infeasible moves are
    simply excluded.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        n = grid.n_cells
        self.neighbor_index = np.full((n, N_CONTROLS), -1, dtype=np.int64)
        self.neighbor_count = np.zeros(n, dtype=np.int64)
        for idx in range(n):
            cell = grid.index_cell(idx)
            moves = feasible_moves(cell, grid)
            self.neighbor_count[idx] = len(moves)
            for k, dest in enumerate(moves):
                self.neighbor_index[idx, k] = grid.cell_index(dest)
        self.neighbor_index.setflags(write=False)
        self.neighbor_count.setflags(write=False)
        self._matrix = None

    @property
    def matrix(self):
        """Dense transition matrix T with T[dest, src] = P(dest | src)."""
        if self._matrix is None:
            n = self.grid.n_cells
            t = np.zeros((n, n))
            for src in range(n):
                share = 1.0 / self.neighbor_count[src]
                for k in range(self.neighbor_count[src]):
                    t[self.neighbor_index[src, k], src] += share
            t.setflags(write=False)
            self._matrix = t
        return self._matrix

    def transition_probs(self, cell):
        """dict dest -> probability for one source cell."""
        moves = feasible_moves(cell, self.grid)
        p = 1.0 / len(moves)
        return {dest: p for dest in moves}


def enumerate_trajectories(cell, horizon: int, grid: Grid):
    """All 5**horizon control sequences in lexicographic order.

    Clamping happens at execution time, so every sequence is admissible
    from every start cell and the local action sets stay uniform in size.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return [tuple(seq) for seq in itertools.product(range(N_CONTROLS), repeat=horizon)]


def robot_path(cell, controls, grid: Grid):
    """Positions after each control of a trajectory (length = horizon)."""
    path = []
    cur = cell
    for u in controls:
        cur = step_robot(cur, u, grid)
        path.append(cur)
    return path


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot of the simulation: entity positions plus the
    per-target belief filters conditioned on the observation history."""

    time: int
    grid: Grid
    robot_positions: tuple
    target_positions: tuple
    filters: tuple

    def __post_init__(self):
        if len(self.filters) != len(self.target_positions):
            raise ValueError("one filter per target required")
        for cell in self.robot_positions + self.target_positions:
            if not self.grid.contains(cell):
                raise ValueError(f"entity out of bounds: {cell}")

    @property
    def n_robots(self):
        return len(self.robot_positions)

    @property
    def n_targets(self):
        return len(self.target_positions)
