"""
Integration tests for the factoring trace

Replays the four-observation trace through the REPL session manager and the
library API and checks the factoring and the beliefs it leaves behind.
"""

import numpy as np

from dynamic_belief.belief_types import BeliefConfig
from dynamic_belief.cli import FACTORING_TRACE, factoring_trace
from dynamic_belief.dynamic_belief import init_belief
from dynamic_belief.fluents import Observation, evaluate
from dynamic_belief.parser import parse_assertion
from dynamic_belief.repl import BeliefSession

EXPECTED = [
    [["color(A)"]],
    [["color(A)"], ["location(B)", "location(C)"]],
    [["color(A)"], ["location(B)", "location(C)", "location(D)"]],
    [["color(A)"], ["color(B)"], ["location(B)"], ["location(C)", "location(D)"]],
]


class TestFactoringTrace:
    """Trace replayed end to end."""

    def test_library_trace(self):
        """factoring_trace reports the expected structure after every row."""
        assert factoring_trace() == EXPECTED

    def test_session_trace(self):
        """The same rows typed into a session give the same final factoring."""
        session = BeliefSession(seed=1)
        for row in FACTORING_TRACE:
            for text in row:
                assert session.execute(f"assert {text}", "trace").startswith("asserted")
        assert session.belief("trace").factor_structure() == EXPECTED[-1]

    def test_final_beliefs(self, demo_schema):
        """C sits next to L4 and D next to C; colours are pinned."""
        belief = init_belief()
        for row in FACTORING_TRACE:
            belief.update(Observation(tuple(parse_assertion(t, demo_schema) for t in row)))
        color_a = demo_schema.variable("color", "A")
        loc_b = demo_schema.variable("location", "B")
        loc_c = demo_schema.variable("location", "C")
        loc_d = demo_schema.variable("location", "D")
        assert belief.most_likely(color_a) == "red"
        assert belief.marginal([loc_b]).prob(("L4",)) == 1.0
        c_support = {v[0] for v, _ in belief.marginal([loc_c]).items(nonzero=True)}
        assert c_support == {"L1", "L3", "L5", "L7"}
        pair = belief.marginal([loc_c, loc_d])
        assert pair.prob(("L1", "L4")) > 0.0
        assert pair.prob(("L1", "L1")) == 0.0
        belief.check_invariants()

    def test_sampled_states_respect_trace(self, demo_schema):
        """Every sampled state satisfies all four rows."""
        belief = init_belief()
        fluents = []
        for row in FACTORING_TRACE:
            entries = tuple(parse_assertion(t, demo_schema) for t in row)
            fluents.extend(f for f, _ in entries)
            belief.update(Observation(entries))
        rng = np.random.default_rng(0)
        for _ in range(100):
            state = belief.sample_state(rng)
            assert all(evaluate(f, state) for f in fluents)

    def test_zero_epsilon_keeps_joins(self):
        """With epsilon=0 nothing is ever split off again."""
        structures = factoring_trace(BeliefConfig(epsilon=0.0))
        assert structures[-1] == [
            ["color(A)"],
            ["color(B)"],
            ["location(B)", "location(C)", "location(D)"],
        ]

    def test_larger_epsilon_same_trace(self):
        """A looser threshold still keeps the correlated C-D pair together."""
        assert factoring_trace(BeliefConfig(epsilon=0.05)) == EXPECTED
