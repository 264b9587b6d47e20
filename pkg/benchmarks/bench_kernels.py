"""Benchmark the numba kernel path against the pure-numpy fallback.

Runs each kernel on representative inputs and reports per-call times and
speedups, plus an end-to-end objective evaluation under the active path.
The active path is selected at import time by SWARMTRACK_DISABLE_NUMBA; the
per-kernel comparison below calls both implementations directly, so one run
covers both paths.

Usage: python benchmarks/bench_kernels.py [--side 10] [--repeats 2000]
"""

import argparse
import time

import numpy as np

from swarmtrack import kernels
from swarmtrack.objective import ObjectiveContext, RolloutEvaluator
from swarmtrack.sensing import HistogramFilter, RangeSensorModel
from swarmtrack.submodular import Action, Selection
from swarmtrack.world import Grid, MotionKernel


def timeit(fn, repeats):
    fn()  # warm-up / JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats * 1e6  # us


def row(name, numba_us, numpy_us):
    speedup = numpy_us / numba_us if numba_us else float("nan")
    print(f"{name:28s} {numba_us:10.1f} {numpy_us:10.1f} {speedup:8.1f}x")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--side", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        print("numba unavailable: only the numpy path can run")
        return

    rng = np.random.default_rng(0)
    grid = Grid(args.side)
    kern = MotionKernel(grid)
    n = grid.n_cells
    p = rng.random(n)
    p /= p.sum()
    dists = rng.random(n) * 30.0
    lik = rng.random(n)

    print(f"grid {args.side}x{args.side} ({n} cells), {args.repeats} repeats")
    print(f"{'kernel':28s} {'numba us':>10s} {'numpy us':>10s} {'speedup':>9s}")

    row(
        "entropy_bits",
        timeit(lambda: kernels._entropy_bits_nb(p), args.repeats),
        timeit(lambda: kernels._entropy_bits_np(p), args.repeats),
    )
    row(
        "gaussian_likelihood",
        timeit(
            lambda: kernels._gaussian_likelihood_nb(dists, 5.0, 20.0, 0.25, 0.5),
            args.repeats,
        ),
        timeit(
            lambda: kernels._gaussian_likelihood_np(dists, 5.0, 20.0, 0.25, 0.5),
            args.repeats,
        ),
    )
    row(
        "posterior",
        timeit(lambda: kernels._posterior_nb(p, lik), args.repeats),
        timeit(lambda: kernels._posterior_np(p, lik), args.repeats),
    )
    row(
        "predict (stencil vs matmul)",
        timeit(
            lambda: kernels._predict_stencil_nb(
                p, kern.neighbor_index, kern.neighbor_count
            ),
            args.repeats,
        ),
        timeit(lambda: kernels._predict_matmul(p, kern.matrix), args.repeats),
    )

    # full-rollout kernels: concentrated and diffuse beliefs
    n_t, n_a, steps = 4, 4, 2
    concentrated = []
    for t in range(n_t):
        f = HistogramFilter.point_mass(
            grid, (int(rng.integers(args.side)), int(rng.integers(args.side)))
        ).predict(kern)
        concentrated.append(f.probs)
    for label, probs in (
        ("rollout (concentrated)", np.stack(concentrated)),
        ("rollout (uniform)", np.full((n_t, n), 1.0 / n)),
    ):
        thresholds = np.zeros(n_t)
        support = np.zeros((n_t, n), dtype=np.int64)
        support_len = np.zeros(n_t, dtype=np.int64)
        for t in range(n_t):
            (nz,) = np.nonzero(probs[t])
            support[t, : len(nz)] = nz
            support_len[t] = len(nz)
        rx = rng.integers(0, args.side, (steps, n_a)).astype(float)
        ry = rng.integers(0, args.side, (steps, n_a)).astype(float)
        noise = rng.standard_normal((steps, n_a, n_t))
        tcx = rng.integers(0, args.side, (steps, n_t)).astype(float)
        tcy = rng.integers(0, args.side, (steps, n_t)).astype(float)
        shared = (
            probs, thresholds, kern.neighbor_index, kern.neighbor_count, True,
            grid.xs, grid.ys, rx, ry, noise, tcx, tcy, 20.0, 0.25, 0.5,
            support, support_len,
        )
        row(
            label,
            timeit(lambda: kernels._rollout_range_nb(*shared), args.repeats // 4),
            timeit(lambda: kernels._rollout_range_np(*shared), args.repeats // 4),
        )

    # end-to-end objective evaluation under the active path
    filters = tuple(
        HistogramFilter.point_mass(
            grid, (int(rng.integers(args.side)), int(rng.integers(args.side)))
        ).predict(kern)
        for _ in range(8)
    )
    ctx = ObjectiveContext(
        grid=grid,
        robot_positions=tuple(
            (int(rng.integers(args.side)), int(rng.integers(args.side)))
            for _ in range(8)
        ),
        filters=filters,
        horizon=2,
        sensor=RangeSensorModel(),
        kernel=kern,
        seed=1,
    )
    selection = Selection(Action(i, (1, 3)) for i in range(6))
    evaluator = RolloutEvaluator(ctx)
    evaluator.value(selection, range(8))
    t0 = time.perf_counter()
    n_eval = 50
    for i in range(n_eval):
        RolloutEvaluator(ctx).value(selection, range(8))
    per_eval = (time.perf_counter() - t0) / n_eval * 1e3
    path = "numba" if kernels.USE_NUMBA else "numpy"
    print(
        f"\nend-to-end 8-sample objective evaluation ({path} path): "
        f"{per_eval:.1f} ms"
    )


if __name__ == "__main__":
    main()
