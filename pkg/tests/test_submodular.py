"""Set-function derivatives, property checks, and brute-force search."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmtrack.submodular import (
    Action,
    CallableOracle,
    CardinalityOracle,
    EnumerationLimitError,
    ModularOracle,
    PartitionMatroid,
    PreconditionError,
    Selection,
    WeightedCoverageOracle,
    brute_force_optimum,
    chain_rule_terms,
    check_properties,
    marginal_gain,
    second_derivative,
)


def actions(n, robot=0):
    return [Action(robot, (i,)) for i in range(n)]


def coverage_instance():
    """Three actions over universe {a, b, c} with unit-ish weights."""
    a0, a1, a2 = actions(3)
    covers = {a0: {"a", "b"}, a1: {"b"}, a2: {"c"}}
    weights = {"a": 2.0, "b": 1.0, "c": 0.5}
    return WeightedCoverageOracle(covers, weights), (a0, a1, a2)


def random_coverage(rng, n_actions=6, n_items=8):
    acts = actions(n_actions)
    covers = {
        a: {i for i in range(n_items) if rng.random() < 0.4} for a in acts
    }
    weights = {i: float(rng.random()) for i in range(n_items)}
    return WeightedCoverageOracle(covers, weights), acts


class TestMarginalGain:
    def test_cardinality_marginal_is_one(self):
        f = CardinalityOracle()
        a = actions(3)
        assert marginal_gain(f, a[2], Selection(a[:2])) == 1.0

    def test_normalized_empty_prior(self):
        f, (a0, _, _) = coverage_instance()
        assert marginal_gain(f, a0, Selection()) == f.evaluate(Selection([a0]))

    def test_coverage_marginal_is_uncovered_weight(self):
        # x covers {a, b}, prior covers {b}: the gain is weight(a) = 2.0
        f, (a0, a1, _) = coverage_instance()
        assert marginal_gain(f, a0, Selection([a1])) == pytest.approx(2.0)

    def test_rejects_member_action(self):
        f = CardinalityOracle()
        a = actions(2)
        with pytest.raises(PreconditionError):
            marginal_gain(f, a[0], Selection(a))


class TestSecondDerivative:
    def test_modular_is_zero(self, rng):
        acts = actions(6)
        f = ModularOracle({a: rng.random() for a in acts})
        d = second_derivative(
            f, Selection(acts[:2]), Selection(acts[2:4]), Selection(acts[4:])
        )
        assert d == pytest.approx(0.0, abs=1e-12)

    def test_identical_coverage_full_redundancy(self):
        a0, a1 = actions(2)
        f = WeightedCoverageOracle({a0: {"x"}, a1: {"x"}}, {"x": 3.0})
        d = second_derivative(f, Selection([a0]), Selection([a1]), Selection())
        assert d == pytest.approx(-f.evaluate(Selection([a0])))

    def test_matches_direct_difference(self, rng):
        f, acts = random_coverage(rng)
        a, b, x = Selection(acts[:2]), Selection(acts[2:4]), Selection(acts[4:])
        # independent evaluation of f(A|B+X) - f(A|X) from raw values
        def val(sel):
            return f.evaluate(sel)
        direct = (val(a | b | x) - val(b | x)) - (val(a | x) - val(x))
        assert second_derivative(f, a, b, x) == pytest.approx(direct, abs=1e-12)

    def test_symmetry(self, rng):
        f, acts = random_coverage(rng)
        a, b, x = Selection(acts[:2]), Selection(acts[2:4]), Selection(acts[4:])
        assert second_derivative(f, a, b, x) == pytest.approx(
            second_derivative(f, b, a, x), abs=1e-12
        )

    def test_rejects_overlap(self):
        f = CardinalityOracle()
        a = actions(3)
        with pytest.raises(PreconditionError):
            second_derivative(
                f, Selection(a[:2]), Selection(a[1:]), Selection()
            )


class TestChainRule:
    def test_singleton_chain(self, rng):
        f, acts = random_coverage(rng)
        a, b, x = Selection(acts[:1]), Selection(acts[1:2]), Selection(acts[2:4])
        terms = chain_rule_terms(f, a, b, x)
        assert len(terms) == 1
        assert terms[0] == pytest.approx(second_derivative(f, a, b, x))

    def test_empty_expansion(self, rng):
        f, acts = random_coverage(rng)
        assert chain_rule_terms(f, Selection(acts[:1]), Selection(), Selection()) == []

    def test_three_element_sum(self, rng):
        f, acts = random_coverage(rng)
        a, b, x = Selection(acts[:1]), Selection(acts[1:4]), Selection(acts[4:])
        total = sum(chain_rule_terms(f, a, b, x))
        assert total == pytest.approx(second_derivative(f, a, b, x), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_sum_identity_property(self, seed):
        rng = np.random.default_rng(seed)
        f, acts = random_coverage(rng, n_actions=8)
        order = rng.permutation(8)
        a = Selection(acts[i] for i in order[:2])
        b = Selection(acts[i] for i in order[2:5])
        x = Selection(acts[i] for i in order[5 : 5 + int(rng.integers(0, 4))])
        total = sum(chain_rule_terms(f, a, b, x))
        assert total == pytest.approx(second_derivative(f, a, b, x), abs=1e-12)


class TestCheckProperties:
    def test_cardinality_all_hold(self):
        report = check_properties(CardinalityOracle(), actions(6))
        assert report.all_hold

    def test_squared_cardinality_not_submodular(self):
        f = CallableOracle(lambda sel: len(sel) ** 2)
        report = check_properties(f, actions(6))
        assert report.normalized and report.monotone and not report.submodular
        assert report.submodularity_violation > 0

    def test_refuses_large_ground(self):
        with pytest.raises(EnumerationLimitError):
            check_properties(CardinalityOracle(), actions(13))

    def test_reports_worst_monotonicity_violation(self):
        f = CallableOracle(lambda sel: -0.5 * len(sel))
        report = check_properties(f, actions(4))
        assert not report.monotone
        # worst violation over nested pairs: f(empty) - f(full) = 2.0
        assert report.monotonicity_violation == pytest.approx(2.0)


class TestBruteForce:
    def test_single_block_is_argmax(self, rng):
        acts = actions(5)
        weights = {a: float(rng.random()) for a in acts}
        f = ModularOracle(weights)
        matroid = PartitionMatroid((tuple(acts),))
        sel, val = brute_force_optimum(f, matroid)
        best = max(acts, key=lambda a: weights[a])
        assert sel == Selection([best]) and val == pytest.approx(weights[best])

    def test_modular_separates_per_block(self, rng):
        blocks = [actions(3, robot=i) for i in range(3)]
        weights = {a: float(rng.random()) for b in blocks for a in b}
        f = ModularOracle(weights)
        sel, _ = brute_force_optimum(f, PartitionMatroid(tuple(map(tuple, blocks))))
        expected = Selection(max(b, key=lambda a: weights[a]) for b in blocks)
        assert sel == expected

    def test_coverage_matches_independent_scan(self, rng):
        blocks = [actions(3, robot=i) for i in range(3)]
        all_acts = [a for b in blocks for a in b]
        covers = {
            a: {i for i in range(6) if rng.random() < 0.5} for a in all_acts
        }
        weights = {i: float(rng.random()) for i in range(6)}
        f = WeightedCoverageOracle(covers, weights)
        sel, val = brute_force_optimum(
            f, PartitionMatroid(tuple(map(tuple, blocks)))
        )
        # independent 27-way enumeration
        best_val = -1.0
        for combo in itertools.product(*blocks):
            covered = set().union(*(covers[a] for a in combo))
            v = sum(weights[i] for i in covered)
            if v > best_val:
                best_val = v
        assert val == pytest.approx(best_val)
        assert f.evaluate(sel) == pytest.approx(best_val)

    def test_cap_refusal(self):
        blocks = tuple(tuple(actions(10, robot=i)) for i in range(8))
        with pytest.raises(EnumerationLimitError):
            brute_force_optimum(CardinalityOracle(), PartitionMatroid(blocks), cap=10**6)

    def test_tie_break_lexicographic(self):
        acts = actions(4)
        f = CardinalityOracle()  # every singleton ties
        sel, _ = brute_force_optimum(f, PartitionMatroid((tuple(acts),)))
        assert sel == Selection([acts[0]])


class TestTypes:
    def test_action_validation(self):
        with pytest.raises(ValueError):
            Action(-1, (0,))
        with pytest.raises(ValueError):
            Action(0, ())

    def test_selection_sorted_iteration(self):
        a = [Action(1, (0,)), Action(0, (3,)), Action(0, (1,))]
        assert list(Selection(a)) == sorted(a)

    def test_matroid_disjointness(self):
        a0 = Action(0, (0,))
        with pytest.raises(ValueError):
            PartitionMatroid(((a0,), (a0,)))

    def test_matroid_independence(self):
        blocks = tuple(tuple(actions(2, robot=i)) for i in range(2))
        m = PartitionMatroid(blocks)
        assert m.is_independent(Selection([blocks[0][0], blocks[1][1]]))
        assert not m.is_independent(Selection(blocks[0]))
