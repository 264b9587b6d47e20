"""Numeric inner-loop kernels with numba acceleration and a numpy fallback.

The histogram-filter operations (motion prediction, Bayes update, entropy)
sit inside every objective rollout and therefore dominate runtime. Each
kernel has a numba ``@njit`` implementation and a vectorized numpy
implementation; the active path is chosen at import time. Set the
environment variable ``SWARMTRACK_DISABLE_NUMBA=1`` to force the numpy
path (or it is used automatically when numba is unavailable).

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("SWARMTRACK_DISABLE_NUMBA", "0") not in (
    "1",
    "true",
    "yes",
)

_LOG2E = math.log2(math.e)


# ---------------------------------------------------------------------------
# numpy implementations


def _entropy_bits_np(p):
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def _gaussian_likelihood_np(dists, y, saturation, var_base, var_scale):
    d = np.minimum(dists, saturation)
    var = var_base + var_scale * d * d
    return np.exp(-0.5 * (y - d) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def _posterior_np(prior, likelihood):
    post = prior * likelihood
    mass = float(post.sum())
    return post, mass


def _threshold_renormalize_np(p, threshold):
    out = np.where(p < threshold, 0.0, p)
    mass = float(out.sum())
    return out, mass


def _predict_matmul(p, matrix):
    return matrix @ p


def _monotonicity_violation_np(values, n):
    # M[A] = max over subsets B of A of values[B], built one bit at a time.
    size = 1 << n
    masks = np.arange(size)
    best_sub = values.copy()
    for bi in range(n):
        bit = 1 << bi
        has = (masks & bit) != 0
        best_sub[has] = np.maximum(best_sub[has], best_sub[masks[has] ^ bit])
    return float(np.max(best_sub - values))


def _submodularity_violation_np(values, n):
    # For each extra element c, the marginal d[X] = v[X+c] - v[X] must be
    # non-increasing in X; worst violation via a subset-minimum sweep.
    size = 1 << n
    masks = np.arange(size)
    worst = 0.0
    for ci in range(n):
        cbit = 1 << ci
        free = (masks & cbit) == 0
        d = np.full(size, np.inf)
        d[free] = values[masks[free] | cbit] - values[masks[free]]
        min_sub = d.copy()
        for bi in range(n):
            if bi == ci:
                continue
            bit = 1 << bi
            has = (masks & bit) != 0
            min_sub[has] = np.minimum(min_sub[has], min_sub[masks[has] ^ bit])
        worst = max(worst, float(np.max(d[free] - min_sub[free])))
    return worst


def _rollout_range_np(
    probs, thresholds, nbr_idx, nbr_cnt, do_predict, xs, ys, rx, ry, noise,
    tcx, tcy, saturation, var_base, var_scale, support=None, support_len=None,
):
    """Full-rollout fallback: probs is (targets, cells); rx/ry are (steps,
    actions); noise is (steps, actions, targets); tcx/tcy are (steps,
    targets) true target coordinates. Returns per-target entropy reductions.

    The dense path ignores the support hint; zero cells contribute nothing
    either way, so it matches the sparse-support numba path exactly.
    """
    n_steps, n_actions = rx.shape
    n_targets = probs.shape[0]
    work = probs.copy()
    contrib = np.zeros(n_targets)
    for k in range(n_steps):
        for j in range(n_targets):
            q = work[j]
            if do_predict:
                out = np.zeros_like(q)
                share = q / nbr_cnt
                for m in range(nbr_idx.shape[1]):
                    col = nbr_idx[:, m]
                    valid = col >= 0
                    np.add.at(out, col[valid], share[valid])
                q = out / out.sum()
            h_pred = _entropy_bits_np(q)
            for a in range(n_actions):
                d_true = math.hypot(rx[k, a] - tcx[k, j], ry[k, a] - tcy[k, j])
                mean_true = min(d_true, saturation)
                var_true = var_base + var_scale * mean_true * mean_true
                y = mean_true + math.sqrt(var_true) * noise[k, a, j]
                dists = np.hypot(rx[k, a] - xs, ry[k, a] - ys)
                lik = _gaussian_likelihood_np(dists, y, saturation, var_base, var_scale)
                post, mass = _posterior_np(q, lik)
                if mass >= 1e-300:
                    q = post / mass
                    if thresholds[j] > 0.0:
                        cut, kept = _threshold_renormalize_np(q, thresholds[j])
                        if kept > 0.0:
                            q = cut / kept
            contrib[j] += h_pred - _entropy_bits_np(q)
            work[j] = q
    return contrib


def _rollout_discrete_np(
    probs, thresholds, nbr_idx, nbr_cnt, do_predict, xs, ys, rx, ry, noise,
    tcx, tcy, floor, range_scale, support=None, support_len=None,
):
    n_steps, n_actions = rx.shape
    n_targets = probs.shape[0]
    work = probs.copy()
    contrib = np.zeros(n_targets)
    for k in range(n_steps):
        for j in range(n_targets):
            q = work[j]
            if do_predict:
                out = np.zeros_like(q)
                share = q / nbr_cnt
                for m in range(nbr_idx.shape[1]):
                    col = nbr_idx[:, m]
                    valid = col >= 0
                    np.add.at(out, col[valid], share[valid])
                q = out / out.sum()
            h_pred = _entropy_bits_np(q)
            for a in range(n_actions):
                d_true = math.hypot(rx[k, a] - tcx[k, j], ry[k, a] - tcy[k, j])
                p_true = max(floor, 1.0 - d_true / range_scale)
                hit = noise[k, a, j] < p_true
                dists = np.hypot(rx[k, a] - xs, ry[k, a] - ys)
                p_cells = np.maximum(floor, 1.0 - dists / range_scale)
                lik = p_cells if hit else 1.0 - p_cells
                post, mass = _posterior_np(q, lik)
                if mass >= 1e-300:
                    q = post / mass
                    if thresholds[j] > 0.0:
                        cut, kept = _threshold_renormalize_np(q, thresholds[j])
                        if kept > 0.0:
                            q = cut / kept
            contrib[j] += h_pred - _entropy_bits_np(q)
            work[j] = q
    return contrib


# ---------------------------------------------------------------------------
# numba implementations (loop form of the same operations)

if HAS_NUMBA:

    @njit(cache=True)
    def _entropy_bits_nb(p):
        s = 0.0
        for i in range(p.shape[0]):
            if p[i] > 0.0:
                s -= p[i] * np.log2(p[i])
        return s

    @njit(cache=True)
    def _gaussian_likelihood_nb(dists, y, saturation, var_base, var_scale):
        out = np.empty_like(dists)
        for i in range(dists.shape[0]):
            d = dists[i]
            if d > saturation:
                d = saturation
            var = var_base + var_scale * d * d
            diff = y - d
            out[i] = np.exp(-0.5 * diff * diff / var) / np.sqrt(2.0 * np.pi * var)
        return out

    @njit(cache=True)
    def _posterior_nb(prior, likelihood):
        post = np.empty_like(prior)
        mass = 0.0
        for i in range(prior.shape[0]):
            v = prior[i] * likelihood[i]
            post[i] = v
            mass += v
        return post, mass

    @njit(cache=True)
    def _threshold_renormalize_nb(p, threshold):
        out = np.empty_like(p)
        mass = 0.0
        for i in range(p.shape[0]):
            v = p[i]
            if v < threshold:
                v = 0.0
            out[i] = v
            mass += v
        return out, mass

    @njit(cache=True)
    def _predict_stencil_nb(p, neighbor_index, neighbor_count):
        out = np.zeros_like(p)
        for c in range(p.shape[0]):
            mass = p[c]
            if mass == 0.0:
                continue
            share = mass / neighbor_count[c]
            for k in range(neighbor_count[c]):
                out[neighbor_index[c, k]] += share
        return out

    @njit(cache=True, fastmath=True)
    def _rollout_range_nb(
        probs, thresholds, nbr_idx, nbr_cnt, do_predict, xs, ys, rx, ry, noise,
        tcx, tcy, saturation, var_base, var_scale, support, support_len,
    ):
        # Sparse-support evolution: only cells carrying mass are visited.
        # ``support``/``support_len`` give the initial nonzero cells per
        # target; predict can only grow a support into its neighbors, so the
        # active set stays exact at every step.
        n_steps, n_actions = rx.shape
        n_targets, n_cells = probs.shape
        work = probs.copy()
        contrib = np.zeros(n_targets)
        tmp = np.empty(n_cells)
        touched = np.zeros(n_cells, dtype=np.bool_)
        act = np.empty((n_targets, n_cells), dtype=np.int64)
        n_act = np.empty(n_targets, dtype=np.int64)
        new_act = np.empty(n_cells, dtype=np.int64)
        for j in range(n_targets):
            n_act[j] = support_len[j]
            for ii in range(support_len[j]):
                act[j, ii] = support[j, ii]
        for k in range(n_steps):
            for j in range(n_targets):
                q = work[j]
                if do_predict:
                    n_new = 0
                    total = 0.0
                    for ii in range(n_act[j]):
                        c = act[j, ii]
                        mass = q[c]
                        if mass == 0.0:
                            continue
                        total += mass
                        share = mass / nbr_cnt[c]
                        for m in range(nbr_cnt[c]):
                            d = nbr_idx[c, m]
                            if not touched[d]:
                                touched[d] = True
                                new_act[n_new] = d
                                n_new += 1
                                tmp[d] = 0.0
                            tmp[d] += share
                    for ii in range(n_new):
                        d = new_act[ii]
                        touched[d] = False
                        q[d] = tmp[d] / total
                        act[j, ii] = d
                    n_act[j] = n_new
                h_pred = 0.0
                for ii in range(n_act[j]):
                    v = q[act[j, ii]]
                    if v > 0.0:
                        h_pred -= v * np.log2(v)
                for a in range(n_actions):
                    dx = rx[k, a] - tcx[k, j]
                    dy = ry[k, a] - tcy[k, j]
                    d_true = np.sqrt(dx * dx + dy * dy)
                    if d_true > saturation:
                        d_true = saturation
                    var_true = var_base + var_scale * d_true * d_true
                    y = d_true + np.sqrt(var_true) * noise[k, a, j]
                    mass = 0.0
                    for ii in range(n_act[j]):
                        c = act[j, ii]
                        if q[c] == 0.0:
                            tmp[c] = 0.0
                            continue
                        ddx = rx[k, a] - xs[c]
                        ddy = ry[k, a] - ys[c]
                        d = np.sqrt(ddx * ddx + ddy * ddy)
                        if d > saturation:
                            d = saturation
                        var = var_base + var_scale * d * d
                        diff = y - d
                        lik = np.exp(-0.5 * diff * diff / var) / np.sqrt(
                            2.0 * np.pi * var
                        )
                        v = q[c] * lik
                        tmp[c] = v
                        mass += v
                    if mass >= 1e-300:
                        for ii in range(n_act[j]):
                            c = act[j, ii]
                            q[c] = tmp[c] / mass
                        if thresholds[j] > 0.0:
                            kept = 0.0
                            for ii in range(n_act[j]):
                                c = act[j, ii]
                                if q[c] < thresholds[j]:
                                    q[c] = 0.0
                                kept += q[c]
                            if kept > 0.0:
                                for ii in range(n_act[j]):
                                    c = act[j, ii]
                                    q[c] /= kept
                            else:
                                for ii in range(n_act[j]):
                                    c = act[j, ii]
                                    q[c] = tmp[c] / mass
                h_post = 0.0
                for ii in range(n_act[j]):
                    v = q[act[j, ii]]
                    if v > 0.0:
                        h_post -= v * np.log2(v)
                contrib[j] += h_pred - h_post
        return contrib

    @njit(cache=True, fastmath=True)
    def _rollout_discrete_nb(
        probs, thresholds, nbr_idx, nbr_cnt, do_predict, xs, ys, rx, ry, noise,
        tcx, tcy, floor, range_scale, support, support_len,
    ):
        n_steps, n_actions = rx.shape
        n_targets, n_cells = probs.shape
        work = probs.copy()
        contrib = np.zeros(n_targets)
        tmp = np.empty(n_cells)
        touched = np.zeros(n_cells, dtype=np.bool_)
        act = np.empty((n_targets, n_cells), dtype=np.int64)
        n_act = np.empty(n_targets, dtype=np.int64)
        new_act = np.empty(n_cells, dtype=np.int64)
        for j in range(n_targets):
            n_act[j] = support_len[j]
            for ii in range(support_len[j]):
                act[j, ii] = support[j, ii]
        for k in range(n_steps):
            for j in range(n_targets):
                q = work[j]
                if do_predict:
                    n_new = 0
                    total = 0.0
                    for ii in range(n_act[j]):
                        c = act[j, ii]
                        mass = q[c]
                        if mass == 0.0:
                            continue
                        total += mass
                        share = mass / nbr_cnt[c]
                        for m in range(nbr_cnt[c]):
                            d = nbr_idx[c, m]
                            if not touched[d]:
                                touched[d] = True
                                new_act[n_new] = d
                                n_new += 1
                                tmp[d] = 0.0
                            tmp[d] += share
                    for ii in range(n_new):
                        d = new_act[ii]
                        touched[d] = False
                        q[d] = tmp[d] / total
                        act[j, ii] = d
                    n_act[j] = n_new
                h_pred = 0.0
                for ii in range(n_act[j]):
                    v = q[act[j, ii]]
                    if v > 0.0:
                        h_pred -= v * np.log2(v)
                for a in range(n_actions):
                    dx = rx[k, a] - tcx[k, j]
                    dy = ry[k, a] - tcy[k, j]
                    d_true = np.sqrt(dx * dx + dy * dy)
                    p_true = 1.0 - d_true / range_scale
                    if p_true < floor:
                        p_true = floor
                    hit = noise[k, a, j] < p_true
                    mass = 0.0
                    for ii in range(n_act[j]):
                        c = act[j, ii]
                        if q[c] == 0.0:
                            tmp[c] = 0.0
                            continue
                        ddx = rx[k, a] - xs[c]
                        ddy = ry[k, a] - ys[c]
                        d = np.sqrt(ddx * ddx + ddy * ddy)
                        pc = 1.0 - d / range_scale
                        if pc < floor:
                            pc = floor
                        lik = pc if hit else 1.0 - pc
                        v = q[c] * lik
                        tmp[c] = v
                        mass += v
                    if mass >= 1e-300:
                        for ii in range(n_act[j]):
                            c = act[j, ii]
                            q[c] = tmp[c] / mass
                        if thresholds[j] > 0.0:
                            kept = 0.0
                            for ii in range(n_act[j]):
                                c = act[j, ii]
                                if q[c] < thresholds[j]:
                                    q[c] = 0.0
                                kept += q[c]
                            if kept > 0.0:
                                for ii in range(n_act[j]):
                                    c = act[j, ii]
                                    q[c] /= kept
                            else:
                                for ii in range(n_act[j]):
                                    c = act[j, ii]
                                    q[c] = tmp[c] / mass
                h_post = 0.0
                for ii in range(n_act[j]):
                    v = q[act[j, ii]]
                    if v > 0.0:
                        h_post -= v * np.log2(v)
                contrib[j] += h_pred - h_post
        return contrib

    @njit(cache=True)
    def _monotonicity_violation_nb(values, n):
        size = 1 << n
        worst = 0.0
        for a in range(size):
            b = a
            while True:
                viol = values[b] - values[a]
                if viol > worst:
                    worst = viol
                if b == 0:
                    break
                b = (b - 1) & a
        return worst

    @njit(cache=True)
    def _submodularity_violation_nb(values, n):
        size = 1 << n
        worst = 0.0
        for a in range(size):
            b = a
            while True:
                for ci in range(n):
                    cbit = 1 << ci
                    if a & cbit == 0:
                        viol = (values[a | cbit] - values[a]) - (
                            values[b | cbit] - values[b]
                        )
                        if viol > worst:
                            worst = viol
                if b == 0:
                    break
                b = (b - 1) & a
        return worst


# ---------------------------------------------------------------------------
# path selection

if USE_NUMBA:
    entropy_bits = _entropy_bits_nb
    gaussian_likelihood = _gaussian_likelihood_nb
    posterior = _posterior_nb
    threshold_renormalize = _threshold_renormalize_nb
    monotonicity_violation = _monotonicity_violation_nb
    submodularity_violation = _submodularity_violation_nb
    rollout_range = _rollout_range_nb
    rollout_discrete = _rollout_discrete_nb
else:
    entropy_bits = _entropy_bits_np
    gaussian_likelihood = _gaussian_likelihood_np
    posterior = _posterior_np
    threshold_renormalize = _threshold_renormalize_np
    monotonicity_violation = _monotonicity_violation_np
    submodularity_violation = _submodularity_violation_np
    rollout_range = _rollout_range_np
    rollout_discrete = _rollout_discrete_np


def predict_mass(p, kernel):
    """Push probability mass one step through a motion kernel.

    Dispatches to the stencil loop (numba) or a dense matrix product
    (numpy); ``kernel`` is a ``world.MotionKernel``.
    """
    if USE_NUMBA:
        return _predict_stencil_nb(p, kernel.neighbor_index, kernel.neighbor_count)
    return _predict_matmul(p, kernel.matrix)
