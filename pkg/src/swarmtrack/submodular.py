"""Set functions, discrete derivatives, partition matroids, and brute-force
search.

Ground-set elements are ``Action`` values: a robot index paired with a
finite-horizon control sequence. Utility functions over sets of actions are
exposed through ``SetFunctionOracle``; the derivative operations here are what
the coordination planners and the suboptimality-bound checks are built on.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels


class PreconditionError(ValueError):
    """An operation was called with arguments violating its contract."""


class EnumerationLimitError(ValueError):
    """An exhaustive operation would exceed its configured size cap."""


@dataclass(frozen=True, order=True)
class Action:
    """One ground-set element: robot ``robot_id`` committing to ``controls``."""

    robot_id: int
    controls: tuple

    def __post_init__(self):
        if self.robot_id < 0:
            raise ValueError(f"robot_id must be non-negative, got {self.robot_id}")
        if len(self.controls) < 1:
            raise ValueError("controls must have length >= 1")
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))


class Selection:
    """An immutable set of actions, iterated in sorted order.

    Sorted iteration makes chain-rule expansions and tie-breaking
    reproducible everywhere a Selection is consumed.
    """

    __slots__ = ("_actions",)

    def __init__(self, actions=()):
        self._actions = tuple(sorted(set(actions)))

    @property
    def actions(self):
        return self._actions

    def __iter__(self):
        return iter(self._actions)

    def __len__(self):
        return len(self._actions)

    def __contains__(self, action):
        return action in self._actions

    def __eq__(self, other):
        return isinstance(other, Selection) and self._actions == other._actions

    def __hash__(self):
        return hash(self._actions)

    def __repr__(self):
        return f"Selection({list(self._actions)!r})"

    def add(self, action: Action) -> "Selection":
        return Selection(self._actions + (action,))

    def union(self, other) -> "Selection":
        return Selection(self._actions + tuple(other))

    def __or__(self, other):
        return self.union(other)

    def robot_ids(self):
        return {a.robot_id for a in self._actions}

    def isdisjoint(self, other) -> bool:
        return set(self._actions).isdisjoint(set(tuple(other)))


EMPTY = Selection()


@dataclass(frozen=True)
class PartitionMatroid:
    """Disjoint per-robot action blocks; independent sets take at most one
    action per block."""

    blocks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen = set()
        for block in blocks:
            for action in block:
                if action in seen:
                    raise ValueError(f"blocks are not disjoint: {action!r} repeated")
                seen.add(action)

    @property
    def ground_set(self):
        return tuple(a for block in self.blocks for a in block)

    def is_independent(self, selection: Selection) -> bool:
        for block in self.blocks:
            if sum(1 for a in selection if a in block) > 1:
                return False
        return True

    def is_basis(self, selection: Selection) -> bool:
        if len(selection) != len(self.blocks):
            return False
        return self.is_independent(selection) and all(
            a in self.ground_set for a in selection
        )


class SetFunctionOracle:
    """Evaluates a set function; ``marginal`` defaults to a two-evaluation
    difference. Subclasses must be pure: safe to call concurrently."""

    def evaluate(self, selection: Selection) -> float:
        raise NotImplementedError

    def marginal(self, action: Action, selection: Selection) -> float:
        return self.evaluate(selection.add(action)) - self.evaluate(selection)


class CardinalityOracle(SetFunctionOracle):
    def evaluate(self, selection):
        return float(len(selection))


class ModularOracle(SetFunctionOracle):
    """Additive function: sum of per-action weights."""

    def __init__(self, weights):
        self.weights = dict(weights)

    def evaluate(self, selection):
        return float(sum(self.weights[a] for a in selection))


class WeightedCoverageOracle(SetFunctionOracle):
    """f(X) = total weight of universe items covered by any action in X."""

    def __init__(self, covers, item_weights):
        self.covers = {a: frozenset(items) for a, items in covers.items()}
        self.item_weights = dict(item_weights)

    def evaluate(self, selection):
        covered = set()
        for a in selection:
            covered |= self.covers[a]
        return float(sum(self.item_weights[i] for i in covered))


class CallableOracle(SetFunctionOracle):
    def __init__(self, fn):
        self.fn = fn

    def evaluate(self, selection):
        return float(self.fn(selection))


def marginal_gain(f: SetFunctionOracle, x: Action, selection: Selection) -> float:
    """First discrete derivative f(x | X) = f(X + x) - f(X)."""
    if x in selection:
        raise PreconditionError(f"action {x!r} already in selection")
    return f.marginal(x, selection)


def _require_disjoint(*selections):
    for i, a in enumerate(selections):
        for b in selections[i + 1 :]:
            if not a.isdisjoint(b):
                raise PreconditionError("arguments must be pairwise disjoint")


def second_derivative(
    f: SetFunctionOracle, a: Selection, b: Selection, x: Selection
) -> float:
    """f(A; B | X) = f(A | B + X) - f(A | X): the effective redundancy
    between A and B given X (negative when they overlap in what they cover).
    """
    _require_disjoint(a, b, x)
    bx = b.union(x)
    return (f.evaluate(a.union(bx)) - f.evaluate(bx)) - (
        f.evaluate(a.union(x)) - f.evaluate(x)
    )


def chain_rule_terms(
    f: SetFunctionOracle, a: Selection, b: Selection, x: Selection
) -> list:
    """Expand f(A; B | X) into per-element terms f(A; b_k | B_{1:k-1} + X).

    The elements of B are taken in their sorted order; the terms sum to
    ``second_derivative(f, a, b, x)``.
    """
    _require_disjoint(a, b, x)
    terms = []
    prefix = x
    for bk in b:
        terms.append(second_derivative(f, a, Selection([bk]), prefix))
        prefix = prefix.add(bk)
    return terms


@dataclass(frozen=True)
class PropertyReport:
    normalized: bool
    monotone: bool
    submodular: bool
    normalization_error: float
    monotonicity_violation: float
    submodularity_violation: float

    @property
    def all_hold(self):
        return self.normalized and self.monotone and self.submodular


DEFAULT_PROPERTY_GROUND_LIMIT = 12


def check_properties(
    f: SetFunctionOracle,
    ground,
    tolerance: float = 1e-9,
    max_ground: int = DEFAULT_PROPERTY_GROUND_LIMIT,
) -> PropertyReport:
    """Exhaustively test normalization, monotonicity over all nested subset
    pairs, and the diminishing-gains inequality over all (A, B ⊆ A, C ∉ A).

    Worst violation magnitudes are reported; a property holds when its worst
    violation is within ``tolerance``.
    """
    ground = tuple(sorted(set(ground)))
    n = len(ground)
    if n > max_ground:
        raise EnumerationLimitError(
            f"ground set of {n} elements exceeds the exhaustive-check limit "
            f"of {max_ground}"
        )
    size = 1 << n
    values = np.empty(size)
    for mask in range(size):
        subset = Selection(ground[i] for i in range(n) if mask >> i & 1)
        values[mask] = f.evaluate(subset)

    norm_err = abs(values[0])
    mono_viol = kernels.monotonicity_violation(values, n)
    sub_viol = kernels.submodularity_violation(values, n)
    return PropertyReport(
        normalized=norm_err <= tolerance,
        monotone=mono_viol <= tolerance,
        submodular=sub_viol <= tolerance,
        normalization_error=float(norm_err),
        monotonicity_violation=float(mono_viol),
        submodularity_violation=float(sub_viol),
    )


def brute_force_optimum(
    f: SetFunctionOracle, matroid: PartitionMatroid, cap: int = 10**6
):
    """Exact maximizer over all bases of the partition matroid.

    Ties go to the lexicographically smallest selection; the scan order
    (sorted blocks, sorted actions) guarantees it without extra bookkeeping.
    """
    total = 1
    for block in matroid.blocks:
        total *= max(len(block), 1)
    if total > cap:
        raise EnumerationLimitError(
            f"basis count {total} exceeds cap {cap}; raise the cap to search"
        )

    import itertools

    best_sel, best_val = None, -np.inf
    for combo in itertools.product(*matroid.blocks):
        sel = Selection(combo)
        val = f.evaluate(sel)
        if val > best_val:
            best_sel, best_val = sel, val
    return best_sel, float(best_val)
