"""Range sensor model and per-target histogram Bayes filters.

Each robot takes one range observation per target per time step. Ranges are
Gaussian with a distance-saturated mean, so cells beyond the saturation
radius become indistinguishable from each other (but not from near cells).
Filters are value types: every operation returns a new filter.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .world import Grid, MotionKernel

MASS_TOLERANCE = 1e-9
DEGENERATE_MASS = 1e-300
SPARSE_THRESHOLD_DEFAULT = 1e-3


class DegenerateUpdateError(ValueError):
    """Posterior mass underflowed; callers fall back to the prior."""


@dataclass(frozen=True)
class RangeSensorModel:
    """Gaussian range sensor: mean min(d, saturation), variance
    var_base + var_scale * min(d, saturation)**2."""

    saturation: float = 20.0
    var_base: float = 0.25
    var_scale: float = 0.5

    def mean_var(self, distance: float):
        d = min(distance, self.saturation)
        return d, self.var_base + self.var_scale * d * d

    def likelihood_grid(self, y: float, robot_cell, grid: Grid):
        """Observation density of y for every candidate target cell."""
        dists = cell_distances(grid, robot_cell)
        return kernels.gaussian_likelihood(
            dists, y, self.saturation, self.var_base, self.var_scale
        )


_DIST_CACHE = {}


def cell_distances(grid: Grid, cell):
    """Euclidean distances from ``cell`` to every grid cell (cached)."""
    key = (grid.side, cell)
    hit = _DIST_CACHE.get(key)
    if hit is None:
        delta = grid.coordinates - np.array(cell, dtype=float)
        hit = np.hypot(delta[:, 0], delta[:, 1])
        hit.setflags(write=False)
        _DIST_CACHE[key] = hit
    return hit


def euclidean(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def sample_observation(robot_cell, target_cell, model: RangeSensorModel, rng) -> float:
    """Draw one range observation; negative values are possible (the
    Gaussian is not truncated)."""
    mean, var = model.mean_var(euclidean(robot_cell, target_cell))
    return float(mean + math.sqrt(var) * rng.standard_normal())


def observation_from_normal(robot_cell, target_cell, model, z: float) -> float:
    """Observation from a pre-drawn standard normal (common-random-number
    evaluation paths)."""
    mean, var = model.mean_var(euclidean(robot_cell, target_cell))
    return float(mean + math.sqrt(var) * z)


def likelihood(y: float, robot_cell, candidate_cell, model: RangeSensorModel) -> float:
    """Gaussian density of y if the target were at ``candidate_cell``."""
    mean, var = model.mean_var(euclidean(robot_cell, candidate_cell))
    return float(math.exp(-0.5 * (y - mean) ** 2 / var) / math.sqrt(2 * math.pi * var))


class HistogramFilter:
    """Probability mass over grid cells for one target.

    ``sparse_threshold > 0`` drops cells below the threshold after each
    update and renormalizes, bounding the support that later predictions
    must visit.
    """

    __slots__ = ("grid", "probs", "sparse_threshold")

    def __init__(self, grid: Grid, probs, sparse_threshold: float = 0.0):
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (grid.n_cells,):
            raise ValueError("probability vector must have one entry per cell")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"mass must sum to 1, got {total}")
        probs = probs.copy()
        probs.setflags(write=False)
        self.grid = grid
        self.probs = probs
        self.sparse_threshold = sparse_threshold

    # -- constructors -------------------------------------------------

    @classmethod
    def _wrap(cls, grid, probs, sparse_threshold):
        """Internal: adopt an already-normalized fresh array without
        validation or copying (rollout hot path)."""
        f = object.__new__(cls)
        probs.setflags(write=False)
        f.grid = grid
        f.probs = probs
        f.sparse_threshold = sparse_threshold
        return f

    @classmethod
    def point_mass(cls, grid: Grid, cell, sparse_threshold: float = 0.0):
        p = np.zeros(grid.n_cells)
        p[grid.cell_index(cell)] = 1.0
        return cls(grid, p, sparse_threshold)

    @classmethod
    def uniform(cls, grid: Grid, sparse_threshold: float = 0.0):
        p = np.full(grid.n_cells, 1.0 / grid.n_cells)
        return cls(grid, p, sparse_threshold)

    @classmethod
    def from_cell_probs(cls, grid: Grid, cell_probs: dict, sparse_threshold=0.0):
        p = np.zeros(grid.n_cells)
        for cell, prob in cell_probs.items():
            idx = cell if isinstance(cell, int) else grid.cell_index(cell)
            p[idx] = prob
        return cls(grid, p, sparse_threshold)

    # -- operations ---------------------------------------------------

    def predict(self, kernel: MotionKernel) -> "HistogramFilter":
        """Push the mass one step through the target motion kernel."""
        out = kernels.predict_mass(self.probs, kernel)
        out = out / out.sum()
        return HistogramFilter._wrap(self.grid, out, self.sparse_threshold)

    def updated_with_likelihood(self, lik) -> "HistogramFilter":
        post, mass = kernels.posterior(self.probs, lik)
        if mass < DEGENERATE_MASS:
            raise DegenerateUpdateError(
                f"posterior mass {mass} underflowed; keep the prior"
            )
        post = post / mass
        if self.sparse_threshold > 0.0:
            cut, kept = kernels.threshold_renormalize(post, self.sparse_threshold)
            if kept > 0.0:  # a fully sub-threshold posterior stays unthresholded
                post = cut / kept
        return HistogramFilter._wrap(self.grid, post, self.sparse_threshold)

    def update(self, y: float, robot_cell, model: RangeSensorModel):
        """Bayes update with one range observation (posterior ∝ prior × likelihood)."""
        return self.updated_with_likelihood(model.likelihood_grid(y, robot_cell, self.grid))

    def sparsify(self, threshold: float = None) -> "HistogramFilter":
        thr = self.sparse_threshold if threshold is None else threshold
        if thr <= 0.0:
            return self
        out, mass = kernels.threshold_renormalize(self.probs, thr)
        if mass < DEGENERATE_MASS:
            raise DegenerateUpdateError("sparsification removed all mass")
        return HistogramFilter._wrap(self.grid, out / mass, self.sparse_threshold)

    def entropy(self) -> float:
        """Shannon entropy in bits."""
        return float(kernels.entropy_bits(self.probs))

    def mean_position(self):
        """Probability-weighted mean cell coordinates."""
        m = self.probs @ self.grid.coordinates
        return (float(m[0]), float(m[1]))

    def cell_probs(self) -> dict:
        """Sparse mapping cell index -> probability (nonzero cells only)."""
        (nz,) = np.nonzero(self.probs)
        return {int(i): float(self.probs[i]) for i in nz}

    def sample_cell(self, u: float) -> int:
        """Inverse-CDF draw of a cell index from one uniform in [0, 1)."""
        cdf = np.cumsum(self.probs)
        return int(np.searchsorted(cdf, u * cdf[-1], side="right").clip(0, len(cdf) - 1))

    def max_prob(self) -> float:
        return float(self.probs.max())
