"""Anytime single-robot trajectory search (UCT) and an exhaustive oracle.

The tree spans control sequences up to the planning horizon; leaf values are
single-rollout samples of the conditional objective gain, so the search
sharpens its own estimate of promising trajectories by revisiting them.
``exhaustive_plan`` is the deterministic reference: it scores every
trajectory with a fixed high-sample evaluation.
"""

import math
import time
from dataclasses import dataclass

from .objective import ConditionalObjective
from .submodular import Action
from .world import N_CONTROLS

_MIN_EXPLORATION = 1e-6


@dataclass(frozen=True)
class Budget:
    """Search limits: iteration count and/or wall-clock seconds."""

    iterations: int = None
    wall_time_s: float = None
    exploration_scale: float = 0.5

    def __post_init__(self):
        if self.iterations is None and self.wall_time_s is None:
            raise ValueError("set at least one of iterations / wall_time_s")
        if self.exploration_scale <= 0:
            raise ValueError("exploration_scale must be positive")


class SearchNode:
    __slots__ = ("controls", "visits", "value_sum", "children")

    def __init__(self, controls):
        self.controls = controls
        self.visits = 0
        self.value_sum = 0.0
        self.children = {}

    def mean(self):
        return self.value_sum / self.visits if self.visits else 0.0


def _select_child(node: SearchNode, c: float) -> SearchNode:
    best, best_score = None, -math.inf
    log_n = math.log(node.visits)
    for sym in range(N_CONTROLS):  # symbol order breaks ties lexicographically
        child = node.children.get(sym)
        if child is None:
            continue
        score = child.mean() + c * math.sqrt(log_n / child.visits)
        if score > best_score:
            best, best_score = child, score
    return best


def plan_anytime(objective: ConditionalObjective, budget: Budget, rng) -> Action:
    """UCT search over the robot's trajectory set.

    Leaf evaluation draws one fresh objective rollout for the partial
    sequence completed by a uniform random rollout; the returned action is
    the most-visited root-to-leaf path. A valid action is returned for any
    budget, including zero.
    """
    horizon = objective.horizon
    root = SearchNode(())
    deadline = (
        time.perf_counter() + budget.wall_time_s
        if budget.wall_time_s is not None
        else None
    )
    value_mean_abs = 0.0
    it = 0
    while True:
        if budget.iterations is not None and it >= budget.iterations:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break

        # selection / expansion
        path = [root]
        node = root
        while len(node.controls) < horizon:
            expand_sym = None
            for sym in range(N_CONTROLS):
                if sym not in node.children:
                    expand_sym = sym
                    break
            if expand_sym is not None:
                child = SearchNode(node.controls + (expand_sym,))
                node.children[expand_sym] = child
                path.append(child)
                node = child
                break
            c = budget.exploration_scale * max(value_mean_abs, _MIN_EXPLORATION)
            node = _select_child(node, c)
            path.append(node)

        # rollout completion + one-sample evaluation
        controls = node.controls
        while len(controls) < horizon:
            controls = controls + (int(rng.integers(N_CONTROLS)),)
        value = objective.gain(controls, samples=(it,))

        value_mean_abs += (abs(value) - value_mean_abs) / (it + 1)
        for n in path:
            n.visits += 1
            n.value_sum += value
        it += 1

    # most-visited path; unexplored levels fall back to the first symbol
    controls = []
    node = root
    while len(controls) < horizon:
        best_sym, best_visits = 0, -1
        for sym in range(N_CONTROLS):
            child = node.children.get(sym)
            if child is not None and child.visits > best_visits:
                best_sym, best_visits = sym, child.visits
        controls.append(best_sym)
        node = node.children.get(best_sym) or SearchNode(tuple(controls))
    return objective.action(tuple(controls))


def exhaustive_plan(objective: ConditionalObjective, m_ref: int = 256):
    """Exact argmax of conditional gain over all trajectories, scored with a
    fixed ``m_ref``-sample evaluation; first-in-lexicographic-order wins
    ties. Returns (action, reference gain)."""
    samples = range(m_ref)
    best_controls, best_val = None, -math.inf
    for controls in objective.candidate_controls():
        val = objective.gain(controls, samples)
        if val > best_val:
            best_controls, best_val = controls, val
    return objective.action(best_controls), float(best_val)
