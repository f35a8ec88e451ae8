"""Unit tests for the determinize-and-replan planner."""

import heapq
import itertools

import numpy as np
import pytest

from dynamic_belief.belief_types import BeliefConfig
from dynamic_belief.cooking import (
    CookingEnv,
    Operator,
    OperatorKind,
    WorldConfig,
    generate_world,
    initial_belief,
    step,
)
from dynamic_belief.distributions import JointDistribution
from dynamic_belief.dynamic_belief import init_belief
from dynamic_belief.errors import DeterminizeError
from dynamic_belief.fluents import Observation
from dynamic_belief.planner import (
    AgentState,
    PlanningState,
    _successors,
    contradicts,
    determinize,
    execute_episode,
    heuristic,
    plan,
)
from tests.utils.oracles import optimal_cost


def _true_state(world):
    vegetables = sorted(
        (loc for loc, name in world.contents.items() if name and world.kinds[name] == "vegetable"),
        key=lambda loc: int(loc[1:]),
    )
    seasonings = sorted(
        (loc for loc, name in world.contents.items() if name and world.kinds[name] == "seasoning"),
        key=lambda loc: int(loc[1:]),
    )
    return PlanningState(tuple(vegetables), tuple(seasonings))


def _exact_costs():
    """Dijkstra over the abstract nodes, for checking the heuristic."""
    goal = (0, 0, 0, 0, 0)
    reverse = {}
    nodes = [
        (rv, rs, hv, hs, t)
        for rv, rs, hv, hs, t in itertools.product(range(3), range(3), range(3), range(3), range(6))
    ]
    for node in nodes:
        for _, cost, child in _successors(node):
            reverse.setdefault(child, []).append((node, cost))
    dist = {goal: 0.0}
    frontier = [(0.0, goal)]
    while frontier:
        d, node = heapq.heappop(frontier)
        if d > dist.get(node, float("inf")):
            continue
        for prev, cost in reverse.get(node, []):
            if d + cost < dist.get(prev, float("inf")):
                dist[prev] = d + cost
                heapq.heappush(frontier, (d + cost, prev))
    return dist


class TestPlan:
    """A* over the abstract cooking state."""

    def test_empty_world(self):
        """Nothing to do costs nothing."""
        result = plan(PlanningState())
        assert len(result) == 0
        assert result.expected_cost == 0.0

    def test_single_vegetable(self):
        """Pick, place and wait five steps: 30 + 160 + 5*10."""
        result = plan(PlanningState(vegetable_locations=("L2",)))
        assert result.expected_cost == 240.0
        kinds = [op.kind for op in result]
        assert kinds == [OperatorKind.PICK, OperatorKind.PLACE_IN_POT] + [OperatorKind.NOOP] * 5
        assert result.steps[0] == Operator.pick("L2")

    def test_seasoning_waits_for_cooking(self):
        """The seasoning goes in only after the vegetable has cooked."""
        result = plan(PlanningState(vegetable_locations=("L0",), seasoning_locations=("L3",)))
        kinds = [op.kind for op in result]
        assert kinds.count(OperatorKind.PLACE_IN_POT) == 2
        assert kinds[-1] == OperatorKind.PLACE_IN_POT
        assert result.expected_cost == 30 + 160 + 30 + 4 * 10 + 160

    def test_held_and_cooking_state(self):
        """Held items and a running timer are part of the start node."""
        result = plan(PlanningState(held_vegetables=1, cooking_remaining=2))
        assert [op.kind for op in result] == [OperatorKind.PLACE_IN_POT] + [OperatorKind.NOOP] * 5
        assert result.expected_cost == 160.0 + 50.0

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_simulator_optimum(self, seed):
        """Plan cost equals a brute-force search over the real simulator."""
        rng = np.random.default_rng(seed)
        vegetables, seasonings = int(rng.integers(0, 3)), int(rng.integers(0, 3))
        config = WorldConfig(grid_rows=2, grid_cols=3, n_vegetables=vegetables, n_seasonings=seasonings)
        world = generate_world(config, rng)
        result = plan(_true_state(world))
        assert result.expected_cost == pytest.approx(optimal_cost(world))
        replay = world.copy()
        total = sum(step(replay, op)[1] for op in result)
        assert total == pytest.approx(result.expected_cost)

    def test_plans_never_observe(self):
        """No successor and no plan step is an Observe."""
        labels = {
            label
            for node in itertools.product(range(3), range(3), range(2), range(2), range(6))
            for label, _, _ in _successors(node)
        }
        assert labels == {"pick_vegetable", "pick_seasoning", "place", "wait"}
        result = plan(PlanningState(("L0", "L3"), ("L1",), held_seasonings=1))
        assert OperatorKind.OBSERVE not in [op.kind for op in result]

    def test_heuristic_admissible(self):
        """The heuristic never exceeds the exact cost-to-go."""
        exact = _exact_costs()
        for node, cost in exact.items():
            assert heuristic(node) <= cost + 1e-9
        assert heuristic((0, 0, 0, 0, 0)) == 0.0


class TestDeterminize:
    """Committing to one world."""

    def test_draw_is_consistent(self, color_schema, rng):
        """The draw covers every tracked variable."""
        belief = init_belief()
        a = color_schema.variable("color", "A")
        belief.add_variable(a, JointDistribution.point(a, "blue"))
        assert determinize(belief, rng) == {a: "blue"}

    def test_retries_then_fails(self, color_schema, rng):
        """Exhausted samples are retried, then reported."""
        belief = init_belief((), BeliefConfig(max_joint_entries=1, max_backtrack_steps=20))
        a, b = (color_schema.variable("color", n) for n in ("A", "B"))
        belief.add_variable(a, JointDistribution.point(a, "red"))
        belief.add_variable(b, JointDistribution.point(b, "red"))
        belief.update(Observation.of((color_schema.fluent("Different", a, b), 1.0)))
        with pytest.raises(DeterminizeError):
            determinize(belief, rng, retries=2)
        assert belief.stats().n_queries == 2


class TestAgentState:
    """Exact knowledge from the agent's own actions."""

    def test_contradicts(self, cooking_schema):
        """Only certain fluents can contradict a hypothesis."""
        var = cooking_schema.variable("contents", "L0")
        hypothesis = {var: "empty"}
        fluent = cooking_schema.fluent("Equal", var, "vegetable")
        assert contradicts(hypothesis, Observation.of((fluent, 1.0)))
        assert not contradicts(hypothesis, Observation.of((fluent, 0.9)))
        other = cooking_schema.fluent("Equal", cooking_schema.variable("contents", "L1"), "empty")
        assert contradicts(hypothesis, Observation.of((other, 1.0)))

    def test_apply_tracks_held_and_pot(self):
        """Pick then place moves the ingredient into the pot with a cook timer."""
        config = WorldConfig(grid_rows=2, grid_cols=2, n_vegetables=1, n_seasonings=0)
        world = generate_world(config, np.random.default_rng(0))
        location = next(loc for loc, name in world.contents.items() if name)
        agent = AgentState()
        agent.apply(step(world, Operator.pick(location))[2])
        assert agent.held == {"veg0": "vegetable"}
        agent.apply(step(world, Operator.place_in_pot())[2])
        assert agent.held == {}
        assert agent.cooking_remaining() == 5
        assert agent.planning_state({}) == PlanningState(cooking_remaining=5)

    def test_planning_state_from_hypothesis(self, cooking_schema):
        """Contents and positions both contribute pick targets."""
        hypothesis = {
            cooking_schema.variable("contents", "L0"): "vegetable",
            cooking_schema.variable("contents", "L1"): "empty",
            cooking_schema.variable("position", "seas0"): "L3",
        }
        state = AgentState().planning_state(hypothesis)
        assert state.vegetable_locations == ("L0",)
        assert state.seasoning_locations == ("L3",)

    def test_background_fluents(self, cooking_schema):
        """An empty location excludes tracked positions; each fluent is emitted once."""
        left = cooking_schema.variable("contents", "L0")
        contents = cooking_schema.variable("contents", "L1")
        position = cooking_schema.variable("position", "veg0")
        belief = init_belief(
            [
                (left, JointDistribution.uniform(left)),
                (contents, JointDistribution.point(contents, "empty")),
            ],
            BeliefConfig(priors={"position": {"L0": 1, "L1": 1}}),
        )
        belief.add_variable(position)
        agent = AgentState()
        background = agent.background_fluents(belief)
        assert [(f.predicate.name, f.args[1], p) for f, p in background] == [("Different", "L1", 1.0)]
        belief.update(background)
        assert belief.most_likely(position) == "L0"
        again = agent.background_fluents(belief)
        [(fluent, _)] = list(again)
        assert fluent.predicate.name == "Equal"
        assert fluent.args == (left, "vegetable")
        assert len(agent.background_fluents(belief)) == 0


class TestExecuteEpisode:
    """Full episodes on tiny worlds."""

    @pytest.mark.parametrize("representation", ["dynamic", "static"])
    def test_small_world_solved(self, small_world_config, representation):
        """A 2x2 world with one vegetable and one seasoning is solved."""
        env = CookingEnv(small_world_config, np.random.default_rng([0, 0]))
        belief = initial_belief(small_world_config, representation)
        result = execute_episode(env, belief, np.random.default_rng([0, 1]), timeout_s=60.0)
        assert result.solved
        assert not result.timed_out
        assert result.total_cost == pytest.approx(env.total_cost)
        assert result.steps > 0 and result.replans >= 1
        assert result.representation == representation

    def test_step_cap(self, small_world_config):
        """The step cap ends an unsolved episode."""
        env = CookingEnv(small_world_config, np.random.default_rng(3))
        belief = initial_belief(small_world_config)
        result = execute_episode(env, belief, np.random.default_rng(4), step_cap=1)
        assert result.steps == 1
        assert not result.solved

    def test_to_dict_without_timings(self, small_world_config):
        """Timing fields are dropped for reproducible output."""
        env = CookingEnv(small_world_config, np.random.default_rng(3))
        result = execute_episode(env, initial_belief(small_world_config), np.random.default_rng(4))
        data = result.to_dict(include_timings=False)
        assert "wall_time_s" not in data and "query_time_s" not in data
        assert data["solved"] is True

    @pytest.mark.parametrize("representation", ["dynamic", "static"])
    def test_certain_observations_never_contradict(self, representation):
        """Noiseless episodes skip no contradictions and finish well under the step cap."""
        config = WorldConfig(grid_rows=2, grid_cols=3, n_vegetables=1, n_seasonings=1)
        for seed in range(40):
            env = CookingEnv(config, np.random.default_rng([seed, 0]))
            belief = initial_belief(config, representation)
            result = execute_episode(env, belief, np.random.default_rng([seed, 1]), timeout_s=60.0)
            assert result.skipped_contradictions == 0, seed
            assert result.solved, seed
            assert result.steps < 40, seed


@pytest.mark.slow
class TestPlanOnLargerWorlds:
    """Plan optimality on 3x3 grids."""

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_simulator_optimum(self, seed):
        """Up to three ingredients on a 3x3 grid plan at the brute-force optimum."""
        rng = np.random.default_rng([seed, 9])
        total = int(rng.integers(1, 4))
        vegetables = int(rng.integers(0, total + 1))
        config = WorldConfig(grid_rows=3, grid_cols=3, n_vegetables=vegetables, n_seasonings=total - vegetables)
        world = generate_world(config, rng)
        result = plan(_true_state(world))
        assert result.expected_cost == pytest.approx(optimal_cost(world, max_expansions=2_000_000))
