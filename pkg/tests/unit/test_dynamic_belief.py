"""Unit tests for the dynamically factored belief."""

import numpy as np
import pytest

from dynamic_belief.belief_types import BeliefConfig, Representation
from dynamic_belief.cooking import build_schema, location_names
from dynamic_belief.distributions import JointDistribution
from dynamic_belief.dynamic_belief import (
    DynamicBelief,
    belief_update,
    init_belief,
    is_too_big,
)
from dynamic_belief.errors import (
    ConfigError,
    ContradictionError,
    DomainError,
    DuplicateVariableError,
    QuerySpansFactorsError,
    SearchExhaustedError,
    UnknownVariableError,
)
from dynamic_belief.fluents import Observation
from tests.utils.oracles import enumerate_joint


def _obs(*pairs):
    return Observation(tuple(pairs))


def _colors(schema, *names):
    return [schema.variable("color", n) for n in names]


def _random_walk(schema, rng, steps):
    """Random fluent updates and actions over colours and locations, checking invariants each step."""
    belief = init_belief((), BeliefConfig(max_joint_entries=200, epsilon=0.01))
    colors = _colors(schema, "A", "B", "C", "D", "E")
    locations = [schema.variable("location", n) for n in ("A", "B", "C")]
    for _ in range(steps):
        roll = rng.random()
        if roll < 0.15:
            var = colors[int(rng.integers(len(colors)))]
            belief.update(Observation(), {var: var.domain[int(rng.integers(3))]})
        else:
            pool = colors if roll < 0.7 else locations
            i, j = rng.choice(len(pool), size=2, replace=False)
            name = ("Same", "Different", "NextTo")[int(rng.integers(3))]
            if pool is colors and name == "NextTo":
                name = "Same"
            fluent = schema.fluent(name, pool[int(i)], pool[int(j)])
            p = 1.0 if rng.random() < 0.5 else float(rng.uniform(0.5, 0.99))
            belief.update(_obs((fluent, p)), on_contradiction="skip")
        belief.check_invariants()
    return belief


class TestInitBelief:
    """Construction from a priori known variables."""

    def test_two_known_variables(self, cooking_schema):
        """Two contents variables give two singleton factors."""
        known = [
            (v, JointDistribution.uniform(v))
            for v in (cooking_schema.variable("contents", "L0"), cooking_schema.variable("contents", "L1"))
        ]
        belief = init_belief(known)
        assert belief.factor_structure() == [["contents(L0)"], ["contents(L1)"]]
        assert belief.complex_fluents() == ()

    def test_empty_open_domain(self):
        """No known variables means no factors."""
        belief = init_belief()
        assert belief.factors() == []
        assert belief.representation is Representation.DYNAMIC

    def test_full_grid(self):
        """A 4x4 grid gives 16 singletons over vegetable/seasoning/empty."""
        schema = build_schema(4, 4)
        known = [
            (v, JointDistribution.uniform(v))
            for v in (schema.variable("contents", loc) for loc in location_names(4, 4))
        ]
        belief = init_belief(known)
        assert len(belief.factors()) == 16
        assert all(f.joint.variables[0].domain == ("vegetable", "seasoning", "empty") for f in belief.factors())

    def test_duplicate_variable(self, color_schema):
        """The same variable twice is rejected."""
        (a,) = _colors(color_schema, "A")
        with pytest.raises(DuplicateVariableError):
            init_belief([(a, JointDistribution.uniform(a)), (a, JointDistribution.uniform(a))])

    def test_prior_must_be_single_variable(self, color_schema):
        """A prior over other variables is rejected."""
        a, b = _colors(color_schema, "A", "B")
        with pytest.raises(ValueError):
            init_belief([(a, JointDistribution.uniform(b))])


class TestBeliefUpdate:
    """Folding observations."""

    def test_certain_equal_makes_point_mass(self, cooking_schema):
        """Equal(contents(L1), vegetable) with p=1 pins the singleton."""
        var = cooking_schema.variable("contents", "L1")
        belief = init_belief([(var, JointDistribution.uniform(var))])
        belief.update(_obs((cooking_schema.fluent("Equal", var, "vegetable"), 1.0)))
        assert belief.marginal([var]).is_point_mass()
        assert belief.most_likely(var) == "vegetable"

    def test_same_joins_two_singletons(self, cooking_schema):
        """Same over two uniform singletons gives one factor uniform over the agreeing pairs."""
        l1 = cooking_schema.variable("contents", "L1")
        l2 = cooking_schema.variable("contents", "L2")
        belief = init_belief([(v, JointDistribution.uniform(v)) for v in (l1, l2)])
        belief.update(_obs((cooking_schema.fluent("Same", l1, l2), 1.0)))
        assert belief.factor_structure() == [["contents(L1)", "contents(L2)"]]
        joint = belief.marginal([l1, l2])
        for (x, y), prob in enumerate_joint(joint).items():
            assert prob == pytest.approx(1 / 3 if x == y else 0.0)

    def test_unseen_variables_are_added(self, belief, color_schema):
        """Variables first seen in an assertion get default singleton factors."""
        (a,) = _colors(color_schema, "A")
        belief.update(_obs((color_schema.fluent("Different", a, "red"), 1.0)))
        assert a in belief
        assert belief.marginal([a]).prob(("red",)) == 0.0

    def test_configured_prior(self, color_schema):
        """priors override the uniform default for newly seen variables."""
        belief = init_belief((), BeliefConfig(priors={"color": {"red": 3, "green": 1}}))
        (a,) = _colors(color_schema, "A")
        b = color_schema.variable("color", "B")
        belief.update(_obs((color_schema.fluent("Same", a, b), 0.5)))
        assert belief.marginal([a]).prob(("blue",)) == 0.0

    def test_lazy_path_when_join_too_big(self, color_schema):
        """A fluent whose joint exceeds the limit is stored, factors untouched."""
        belief = init_belief((), BeliefConfig(max_joint_entries=8))
        a, b = _colors(color_schema, "A", "B")
        fluent = color_schema.fluent("Same", a, b)
        belief.update(_obs((fluent, 1.0)))
        assert belief.factor_structure() == [["color(A)"], ["color(B)"]]
        assert [c.fluent for c in belief.complex_fluents()] == [fluent]
        belief.check_invariants()

    def test_single_factor_fluent_never_lazy(self, color_schema):
        """The size limit only applies to joins of several factors."""
        belief = init_belief((), BeliefConfig(max_joint_entries=2))
        (a,) = _colors(color_schema, "A")
        belief.update(_obs((color_schema.fluent("Equal", a, "red"), 1.0)))
        assert belief.complex_fluents() == ()

    def test_contradiction_restores_belief(self, belief, color_schema):
        """With on_contradiction='raise' a failing update changes nothing."""
        (a,) = _colors(color_schema, "A")
        belief.update(_obs((color_schema.fluent("Equal", a, "green"), 1.0)))
        before = belief.to_json()
        bad = _obs(
            (color_schema.fluent("Equal", color_schema.variable("color", "B"), "red"), 1.0),
            (color_schema.fluent("Equal", a, "blue"), 1.0),
        )
        with pytest.raises(ContradictionError):
            belief.update(bad)
        assert belief.to_json() == before
        belief.check_invariants()

    def test_contradiction_skipped(self, belief, color_schema):
        """With on_contradiction='skip' the offending entry is dropped and counted."""
        (a,) = _colors(color_schema, "A")
        b = color_schema.variable("color", "B")
        belief.update(_obs((color_schema.fluent("Equal", a, "green"), 1.0)))
        belief.update(
            _obs(
                (color_schema.fluent("Equal", a, "blue"), 0.9),
                (color_schema.fluent("Equal", b, "red"), 1.0),
            ),
            on_contradiction="skip",
        )
        assert belief.most_likely(a) == "green"
        assert belief.most_likely(b) == "red"
        assert belief.stats().skipped_contradictions == 1

    def test_invalid_policy(self, belief):
        """Unknown contradiction policies are configuration errors."""
        with pytest.raises(ConfigError):
            belief.update(Observation(), on_contradiction="ignore")

    def test_module_function_returns_same_belief(self, belief, color_schema):
        """belief_update mutates and returns its argument."""
        (a,) = _colors(color_schema, "A")
        out = belief_update(belief, _obs((color_schema.fluent("Equal", a, "red"), 1.0)))
        assert out is belief

    def test_stored_fluent_folded_once_its_variables_join(self, color_schema):
        """A lazily stored fluent is folded when a later join covers its variables."""
        belief = init_belief((), BeliefConfig(max_joint_entries=9))
        a, b, c = _colors(color_schema, "A", "B", "C")
        belief.update(_obs((color_schema.fluent("Same", a, b), 1.0)))
        belief.update(_obs((color_schema.fluent("Different", b, c), 1.0)))
        assert len(belief.complex_fluents()) == 1
        belief.update(_obs((color_schema.fluent("Equal", a, "red"), 1.0)))
        assert belief.factor_structure() == [["color(A)"], ["color(B)"], ["color(C)"]]
        belief.update(_obs((color_schema.fluent("Different", c, b), 1.0)))
        assert belief.complex_fluents() == ()
        assert belief.marginal([c]).prob(("red",)) == 0.0
        belief.check_invariants()


class TestJoinFactorsAndUpdate:
    """Direct joins with Jeffrey's rule."""

    def test_half_confidence(self, belief, color_schema):
        """p=0.5 on Same over uniform colours: 1/6 consistent, 1/12 inconsistent."""
        a, b = _colors(color_schema, "o1", "o2")
        belief.add_variable(a)
        belief.add_variable(b)
        factor = belief.join_factors_and_update(color_schema.fluent("Same", a, b), 0.5)
        assert set(factor.variables) == {a, b}
        for (x, y), prob in enumerate_joint(factor.joint.reorder((a, b))).items():
            assert prob == pytest.approx(1 / 6 if x == y else 1 / 12)
        assert len(belief.factors()) == 1

    def test_requires_tracked_variables(self, belief, color_schema):
        """Every mentioned variable must already be tracked."""
        a, b = _colors(color_schema, "A", "B")
        belief.add_variable(a)
        with pytest.raises(UnknownVariableError):
            belief.join_factors_and_update(color_schema.fluent("Same", a, b), 1.0)

    def test_certain_fluent_is_noop(self, belief, color_schema):
        """A fluent that already holds leaves the factor in place."""
        (a,) = _colors(color_schema, "A")
        first = belief.add_variable(a, JointDistribution.point(a, "red"))
        again = belief.join_factors_and_update(color_schema.fluent("Equal", a, "red"), 0.7)
        assert again is first


class TestTrySplit:
    """Splitting by Jensen-Shannon reconstruction error."""

    def _factor(self, belief, joint):
        return belief._add_factor(joint)

    def test_independent_pair_splits(self, color_schema):
        """An exact product splits into singletons with a tiny threshold."""
        belief = DynamicBelief(BeliefConfig(epsilon=1e-12))
        a, b = _colors(color_schema, "A", "B")
        joint = JointDistribution.from_weights(a, {"red": 1, "blue": 2}).product(
            JointDistribution.from_weights(b, {"green": 1, "blue": 1})
        )
        pieces = belief.try_split(self._factor(belief, joint).id)
        assert len(pieces) == 2
        assert belief.factor_structure() == [["color(A)"], ["color(B)"]]
        assert belief.marginal([a]).prob(("blue",)) == pytest.approx(2 / 3)

    def test_zero_epsilon_never_splits(self, color_schema):
        """The comparison is strict, so epsilon=0 keeps even exact products joint."""
        belief = DynamicBelief(BeliefConfig(epsilon=0.0))
        a, b = _colors(color_schema, "A", "B")
        joint = JointDistribution.uniform(a).product(JointDistribution.uniform(b))
        factor = self._factor(belief, joint)
        assert belief.try_split(factor.id) == [factor]

    def test_correlated_pair_stays_joint(self, color_schema):
        """Perfect correlation has D_JS about 0.2158, above epsilon=0.1."""
        belief = DynamicBelief(BeliefConfig(epsilon=0.1))
        a, b = _colors(color_schema, "A", "B")
        joint = JointDistribution.from_dict((a, b), {("red", "red"): 0.5, ("blue", "blue"): 0.5})
        factor = self._factor(belief, joint)
        belief.try_split(factor.id)
        assert belief.factor_structure() == [["color(A)", "color(B)"]]

    def test_correlated_pair_splits_with_large_epsilon(self, color_schema):
        """With epsilon above 0.2158 the same pair is pulled apart."""
        belief = DynamicBelief(BeliefConfig(epsilon=0.3))
        a, b = _colors(color_schema, "A", "B")
        joint = JointDistribution.from_dict((a, b), {("red", "red"): 0.5, ("blue", "blue"): 0.5})
        belief.try_split(self._factor(belief, joint).id)
        assert belief.factor_structure() == [["color(A)"], ["color(B)"]]

    @pytest.mark.parametrize("fixpoint", [False, True])
    def test_three_variables_one_independent(self, color_schema, fixpoint):
        """An independent variable leaves; the correlated pair stays joint."""
        belief = DynamicBelief(BeliefConfig(split_to_fixpoint=fixpoint))
        x, y, z = _colors(color_schema, "X", "Y", "Z")
        pair = JointDistribution.from_dict(
            (y, z), {("red", "red"): 0.25, ("green", "green"): 0.75}
        )
        joint = JointDistribution.from_weights(x, {"red": 1, "green": 1, "blue": 2}).product(pair)
        belief.try_split(self._factor(belief, joint).id)
        assert belief.factor_structure() == [["color(X)"], ["color(Y)", "color(Z)"]]
        assert belief.marginal([y, z]).allclose(pair)
        belief.check_invariants()

    def test_unknown_factor(self, belief):
        """Splitting a missing factor id fails."""
        with pytest.raises(UnknownVariableError):
            belief.try_split(999)


class TestMarginal:
    """Query type 1."""

    def test_singleton(self, belief, color_schema):
        """A singleton factor's marginal is its own distribution."""
        (a,) = _colors(color_schema, "A")
        prior = JointDistribution.from_weights(a, {"red": 1, "blue": 3})
        belief.add_variable(a, prior)
        assert belief.marginal([a]).allclose(prior)

    def test_subset_of_joined_factor(self, belief, color_schema):
        """Either side of the Same diagonal is uniform."""
        a, b = _colors(color_schema, "A", "B")
        belief.update(_obs((color_schema.fluent("Same", a, b), 1.0)))
        for prob in belief.marginal([a]).table:
            assert prob == pytest.approx(1 / 3)

    def test_spanning_factors(self, belief, color_schema):
        """Variables from different factors cannot be queried jointly."""
        a, b = _colors(color_schema, "A", "B")
        belief.add_variable(a)
        belief.add_variable(b)
        with pytest.raises(QuerySpansFactorsError):
            belief.marginal([a, b])

    def test_unknown_variable(self, belief, color_schema):
        """Untracked variables raise UnknownVariableError."""
        with pytest.raises(UnknownVariableError):
            belief.marginal([color_schema.variable("color", "nobody")])

    def test_cached(self, belief, color_schema):
        """Repeated queries on an unchanged factor hit the cache."""
        a, b = _colors(color_schema, "A", "B")
        belief.update(_obs((color_schema.fluent("Same", a, b), 1.0)))
        assert belief.marginal([a]) is belief.marginal([a])


class TestSampleState:
    """Query type 2."""

    def test_no_complex_fluents(self, belief, color_schema, rng):
        """Every tracked variable gets a value with positive mass."""
        a, b = _colors(color_schema, "A", "B")
        belief.update(_obs((color_schema.fluent("Different", a, "red"), 1.0)))
        belief.add_variable(b)
        for _ in range(50):
            state = belief.sample_state(rng)
            assert set(state) == {a, b}
            assert state[a] != "red"
        assert belief.stats().n_queries == 50

    def test_complex_different_always_holds(self, color_schema, rng):
        """A stored Different over two binary singletons yields only (a,b) or (b,a)."""
        belief = init_belief((), BeliefConfig(max_joint_entries=2))
        a, b = _colors(color_schema, "A", "B")
        for var in (a, b):
            belief.add_variable(var, JointDistribution.from_weights(var, {"red": 1, "blue": 1}))
        belief.update(_obs((color_schema.fluent("Different", a, b), 1.0)))
        assert len(belief.complex_fluents()) == 1
        seen = set()
        for _ in range(1000):
            state = belief.sample_state(rng)
            assert state[a] != state[b]
            seen.add((state[a], state[b]))
        assert seen == {("red", "blue"), ("blue", "red")}

    def test_unsatisfiable_complex_exhausts(self, color_schema, rng):
        """No satisfying assignment ends in SearchExhaustedError."""
        belief = init_belief(
            (), BeliefConfig(max_joint_entries=1, sample_limit_per_factor=5, max_backtrack_steps=200)
        )
        a, b = _colors(color_schema, "A", "B")
        belief.add_variable(a, JointDistribution.point(a, "red"))
        belief.add_variable(b, JointDistribution.point(b, "red"))
        belief.update(_obs((color_schema.fluent("Different", a, b), 1.0)))
        with pytest.raises(SearchExhaustedError):
            belief.sample_state(rng)


class TestUpdateWithAction:
    """Deterministic effects."""

    def test_pick_empties_location(self, cooking_schema):
        """A successful pick leaves a point mass on empty."""
        var = cooking_schema.variable("contents", "L3")
        belief = init_belief([(var, JointDistribution.uniform(var))])
        belief.update(Observation(), {var: "empty"})
        assert belief.marginal([var]).prob(("empty",)) == 1.0

    def test_noop_leaves_belief_unchanged(self, belief, color_schema):
        """An empty effect map changes nothing."""
        a, b = _colors(color_schema, "A", "B")
        belief.update(_obs((color_schema.fluent("Same", a, b), 0.8)))
        before = belief.to_json()
        belief.update(Observation(), {})
        assert belief.to_json() == before

    def test_effect_inside_joint_marginalizes(self, belief, color_schema):
        """The effected variable leaves its factor; the rest keeps its marginal."""
        x, y, z = _colors(color_schema, "X", "Y", "Z")
        joint = JointDistribution.from_dict(
            (x, y, z),
            {("red", "red", "red"): 0.5, ("blue", "green", "blue"): 0.5},
        )
        belief._add_factor(joint)
        belief.update_with_action({y: "blue"})
        assert belief.factor_structure() == [["color(X)", "color(Z)"], ["color(Y)"]]
        assert belief.marginal([x, z]).allclose(joint.marginal([x, z]))
        assert belief.most_likely(y) == "blue"

    def test_out_of_domain_effect(self, belief, color_schema):
        """Effects outside the domain raise DomainError and leave the belief alone."""
        (a,) = _colors(color_schema, "A")
        belief.add_variable(a)
        with pytest.raises(DomainError):
            belief.update(Observation(), {a: "purple"})
        assert belief.marginal([a]).prob(("red",)) == pytest.approx(1 / 3)

    def test_stale_complex_fluents_dropped(self, color_schema):
        """Stored fluents over an overwritten variable are discarded."""
        belief = init_belief((), BeliefConfig(max_joint_entries=2))
        a, b = _colors(color_schema, "A", "B")
        belief.update(_obs((color_schema.fluent("Same", a, b), 1.0)))
        assert len(belief.complex_fluents()) == 1
        belief.update(Observation(), {a: "green"})
        assert belief.complex_fluents() == ()


class TestIsTooBig:
    """Join-size guard."""

    def test_small_product(self):
        """3 x 3 is far below a million."""
        assert is_too_big([3, 3], BeliefConfig()) is False

    def test_large_product(self):
        """10^4 x 10^3 exceeds a million."""
        assert is_too_big([10**4, 10**3], BeliefConfig()) is True

    def test_saturates(self):
        """Enormous products short-circuit to True."""
        assert is_too_big([2**62] * 50, 10**6) is True

    def test_exact_limit_is_not_too_big(self):
        """The bound is inclusive."""
        assert is_too_big([10, 10], 100) is False


class TestInvariants:
    """Partition and serialization."""

    def test_partition_fuzz(self, color_schema):
        """Random update/action sequences keep the factors a partition."""
        _random_walk(color_schema, np.random.default_rng(5), 1500)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [11, 12])
    def test_partition_long_walk(self, color_schema, seed):
        """Ten thousand random steps keep the factors a partition."""
        belief = _random_walk(color_schema, np.random.default_rng(seed), 10_000)
        assert belief.stats().n_variables == 8

    def test_snapshot_is_canonical(self, color_schema):
        """Insertion order does not change the serialized form."""
        a, b = _colors(color_schema, "A", "B")
        first, second = init_belief(), init_belief()
        first.add_variable(a)
        first.add_variable(b)
        second.add_variable(b)
        second.add_variable(a)
        assert first.to_json() == second.to_json()

    def test_stats(self, belief, color_schema):
        """Statistics count factors, sizes and stored fluents."""
        a, b, c = _colors(color_schema, "A", "B", "C")
        belief.update(_obs((color_schema.fluent("Same", a, b), 0.9)))
        belief.add_variable(c)
        stats = belief.stats()
        assert stats.n_variables == 3
        assert stats.n_factors == 2
        assert stats.max_factor_size == 2
        assert stats.mean_factor_size == pytest.approx(1.5)
        assert stats.largest_table == 9
