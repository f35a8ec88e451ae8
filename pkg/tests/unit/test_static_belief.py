"""Unit tests for the statically factored baseline."""

import numpy as np
import pytest

from dynamic_belief.belief_types import BeliefConfig, Representation
from dynamic_belief.cooking import location_names
from dynamic_belief.distributions import JointDistribution
from dynamic_belief.dynamic_belief import init_belief
from dynamic_belief.errors import (
    ContradictionError,
    DuplicateVariableError,
    QuerySpansFactorsError,
)
from dynamic_belief.fluents import Observation
from dynamic_belief.static_belief import StaticBelief, init_static_belief


@pytest.fixture
def contents_vars(cooking_schema):
    return [cooking_schema.variable("contents", loc) for loc in location_names(2, 2)]


@pytest.fixture
def static_belief(contents_vars):
    return init_static_belief([(v, JointDistribution.uniform(v)) for v in contents_vars])


class TestStaticBelief:
    """Fixed singleton factoring."""

    def test_construction(self, static_belief):
        """One singleton per tracked variable, nothing stored."""
        assert static_belief.representation is Representation.STATIC
        assert len(static_belief.factors()) == 4
        assert static_belief.complex_fluents() == ()

    def test_duplicate_tracked_variable(self, contents_vars):
        """The same tracked variable twice is rejected."""
        var = contents_vars[0]
        with pytest.raises(DuplicateVariableError):
            StaticBelief([(var, JointDistribution.uniform(var))] * 2)

    def test_single_variable_fluent_folds(self, static_belief, cooking_schema, contents_vars):
        """Equal on a tracked variable updates its singleton in place."""
        var = contents_vars[1]
        static_belief.update(Observation.of((cooking_schema.fluent("Equal", var, "seasoning"), 1.0)))
        assert static_belief.most_likely(var) == "seasoning"
        assert static_belief.complex_fluents() == ()

    def test_multi_variable_fluent_stored(self, static_belief, cooking_schema, contents_vars):
        """Same over two locations is kept lazily; the structure never changes."""
        before = static_belief.factor_structure()
        fluent = cooking_schema.fluent("Same", contents_vars[0], contents_vars[1])
        static_belief.update(Observation.of((fluent, 1.0)))
        assert static_belief.factor_structure() == before
        assert [c.fluent for c in static_belief.complex_fluents()] == [fluent]

    def test_complex_fluents_deduplicated(self, static_belief, cooking_schema, contents_vars):
        """Repeating an assertion does not grow the store."""
        fluent = cooking_schema.fluent("Different", contents_vars[0], contents_vars[1])
        static_belief.update(Observation.of((fluent, 1.0)))
        static_belief.update(Observation.of((fluent, 1.0)))
        assert len(static_belief.complex_fluents()) == 1

    def test_loose_variables_keep_their_prior(self, static_belief, cooking_schema):
        """Position fluents are stored, never folded, but bind samples."""
        pos = cooking_schema.variable("position", "veg0")
        static_belief.update(Observation.of((cooking_schema.fluent("Equal", pos, "L2"), 1.0)))
        assert not static_belief.is_tracked(pos)
        assert static_belief.marginal([pos]).prob(("L2",)) == pytest.approx(1 / len(pos.domain))
        rng = np.random.default_rng(3)
        for _ in range(20):
            assert static_belief.sample_state(rng)[pos] == "L2"

    def test_multi_variable_marginal(self, static_belief, contents_vars):
        """Joint queries never live in one fixed factor."""
        with pytest.raises(QuerySpansFactorsError):
            static_belief.marginal(contents_vars[:2])

    def test_contradiction_restores(self, static_belief, cooking_schema, contents_vars):
        """An impossible certain fluent leaves the belief as it was."""
        var = contents_vars[0]
        static_belief.update(Observation.of((cooking_schema.fluent("Equal", var, "empty"), 1.0)))
        before = static_belief.to_json()
        with pytest.raises(ContradictionError):
            static_belief.update(
                Observation.of(
                    (cooking_schema.fluent("Same", contents_vars[1], contents_vars[2]), 1.0),
                    (cooking_schema.fluent("Equal", var, "vegetable"), 1.0),
                )
            )
        assert static_belief.to_json() == before

    def test_action_drops_stale_fluents(self, static_belief, cooking_schema, contents_vars):
        """Effects overwrite tracked and loose variables alike."""
        a, b = contents_vars[:2]
        pos = cooking_schema.variable("position", "veg0")
        static_belief.update(
            Observation.of(
                (cooking_schema.fluent("Same", a, b), 1.0),
                (cooking_schema.fluent("Equal", pos, "L0"), 1.0),
            )
        )
        static_belief.update(Observation(), {a: "empty", pos: "held"})
        assert static_belief.complex_fluents() == ()
        assert static_belief.most_likely(a) == "empty"
        assert static_belief.marginal([pos]).is_point_mass()

    def test_snapshot_lists_loose_variables(self, static_belief, cooking_schema):
        """Loose priors appear in the canonical snapshot."""
        pos = cooking_schema.variable("position", "seas0")
        static_belief.update(Observation.of((cooking_schema.fluent("In", pos, frozenset({"L0", "L1"})), 1.0)))
        snapshot = static_belief.snapshot()
        assert [entry["variable"] for entry in snapshot["loose"]] == ["position(seas0)"]
        assert snapshot["representation"] == "static"


class TestMatchesDynamicOnSingleVariableStreams:
    """Both representations agree when every fluent mentions one tracked variable."""

    def test_marginals_agree(self, cooking_schema, contents_vars):
        """Random single-location fluents give identical marginals."""
        rng = np.random.default_rng(11)
        priors = [(v, JointDistribution.uniform(v)) for v in contents_vars]
        static = StaticBelief(priors, BeliefConfig())
        dynamic = init_belief(priors, BeliefConfig())
        for _ in range(40):
            var = contents_vars[int(rng.integers(len(contents_vars)))]
            value = var.domain[int(rng.integers(3))]
            name = "Equal" if rng.random() < 0.5 else "Different"
            p = float(rng.uniform(0.55, 0.95))
            observation = Observation.of((cooking_schema.fluent(name, var, value), p))
            static.update(observation, on_contradiction="skip")
            dynamic.update(observation, on_contradiction="skip")
        assert dynamic.factor_structure() == static.factor_structure()
        for var in contents_vars:
            assert dynamic.marginal([var]).allclose(static.marginal([var]))
