"""
Determinize-and-Replan Planner

The agent commits to one world drawn from its belief, plans a minimum-cost
operator sequence in that world with A*, and executes it. After every step the
belief absorbs the received observation and assertion; the plan is dropped and
rebuilt whenever a certain (p = 1) fluent contradicts the committed world or a
pick comes back different from what the plan expected.

The search runs over an abstract state (ingredients left on the grid and held,
per kind, plus the remaining cooking time in the pot). Pick costs do not depend
on the location, so an abstract plan grounds onto any matching locations
without changing its cost.

Plans never contain Observe. In the committed world every location is already
known, and an assertion arrives after every step regardless.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Any, ClassVar, Iterator, Mapping

import numpy as np

from .base_belief import BeliefState
from .cooking import (
    COOK_TIME,
    EMPTY,
    HELD,
    LIVING_COST,
    MAX_HELD,
    PICK_COST,
    PLACE_BASE_COST,
    PLACE_PER_ITEM_COST,
    POT,
    SEASONING,
    SEASONING_PENALTY,
    VEGETABLE,
    ActionRecord,
    CookingEnv,
    Operator,
    OperatorKind,
)
from .errors import DeterminizeError, NoPlanError, SearchExhaustedError
from .fluents import DIFFERENT, EQUAL, Fluent, Observation, StateVariable, evaluate

logger = logging.getLogger(__name__)

DEFAULT_STEP_CAP = 10_000
DEFAULT_TIMEOUT_S = 60.0
DETERMINIZE_RETRIES = 3


# -- determinization ------------------------------------------------------------


def determinize(
    belief: BeliefState, rng: np.random.Generator, retries: int = DETERMINIZE_RETRIES
) -> dict[StateVariable, Any]:
    """Draw a consistent world to plan in, retrying exhausted searches."""
    for attempt in range(1, retries + 1):
        try:
            return belief.sample_state(rng)
        except SearchExhaustedError:
            logger.debug("Determinization attempt %d/%d exhausted", attempt, retries)
    raise DeterminizeError(f"no consistent state drawn in {retries} attempts")


# -- abstract search ----------------------------------------------------------


@dataclass(frozen=True)
class PlanningState:
    """What the planner needs to know about a (hypothesized) world."""

    vegetable_locations: tuple[str, ...] = ()
    seasoning_locations: tuple[str, ...] = ()
    held_vegetables: int = 0
    held_seasonings: int = 0
    cooking_remaining: int = 0


@dataclass(frozen=True)
class Plan:
    steps: tuple[Operator, ...] = ()
    expected_cost: float = 0.0

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[Operator]:
        return iter(self.steps)


# Abstract search node: (veg left, seas left, veg held, seas held, cooking steps left)
_Node = tuple[int, int, int, int, int]

_PICK_VEGETABLE = "pick_vegetable"
_PICK_SEASONING = "pick_seasoning"
_PLACE = "place"
_WAIT = "wait"


def _successors(node: _Node) -> Iterator[tuple[str, float, _Node]]:
    rv, rs, hv, hs, timer = node
    ticked = max(timer - 1, 0)
    if hv + hs < MAX_HELD:
        if rv:
            yield _PICK_VEGETABLE, PICK_COST + LIVING_COST, (rv - 1, rs, hv + 1, hs, ticked)
        if rs:
            yield _PICK_SEASONING, PICK_COST + LIVING_COST, (rv, rs - 1, hv, hs + 1, ticked)
    if hv + hs:
        cost = PLACE_BASE_COST + PLACE_PER_ITEM_COST * (hv + hs) + LIVING_COST
        if hs and (rv or hv or timer):
            cost += SEASONING_PENALTY
        yield _PLACE, cost, (rv, rs, 0, 0, COOK_TIME if hv else ticked)
    if timer:
        yield _WAIT, LIVING_COST, (rv, rs, hv, hs, ticked)


def heuristic(node: _Node) -> float:
    """Admissible lower bound on the cost-to-go of an abstract node."""
    rv, rs, hv, hs, timer = node
    outstanding = rv + rs + hv + hs
    estimate = 0.0
    if outstanding:
        estimate = math.ceil(outstanding / MAX_HELD) * (PICK_COST + LIVING_COST) + (
            PLACE_BASE_COST + LIVING_COST
        )
    return max(estimate, timer * LIVING_COST)


def plan(state: PlanningState) -> Plan:
    """Cost-optimal plan reaching the goal in the hypothesized world.

    Raises:
        NoPlanError: the goal is unreachable (more held than the pot step allows)
    """
    start: _Node = (
        len(state.vegetable_locations),
        len(state.seasoning_locations),
        state.held_vegetables,
        state.held_seasonings,
        state.cooking_remaining,
    )
    tie = itertools.count()
    frontier: list[tuple[float, int, float, _Node]] = [(heuristic(start), next(tie), 0.0, start)]
    best: dict[_Node, float] = {start: 0.0}
    parent: dict[_Node, tuple[_Node, str]] = {}
    while frontier:
        _, _, cost, node = heapq.heappop(frontier)
        if cost > best.get(node, math.inf):
            continue
        if node == (0, 0, 0, 0, 0):
            return _ground(state, _unwind(parent, node), cost)
        for move, step_cost, child in _successors(node):
            child_cost = cost + step_cost
            if child_cost < best.get(child, math.inf):
                best[child] = child_cost
                parent[child] = (node, move)
                heapq.heappush(frontier, (child_cost + heuristic(child), next(tie), child_cost, child))
    raise NoPlanError(f"no plan reaches the goal from {start}")


def _unwind(parent: Mapping[_Node, tuple[_Node, str]], node: _Node) -> list[str]:
    moves: list[str] = []
    while node in parent:
        node, move = parent[node]
        moves.append(move)
    moves.reverse()
    return moves


def _ground(state: PlanningState, moves: list[str], cost: float) -> Plan:
    vegetables = deque(state.vegetable_locations)
    seasonings = deque(state.seasoning_locations)
    steps: list[Operator] = []
    for move in moves:
        if move == _PICK_VEGETABLE:
            steps.append(Operator.pick(vegetables.popleft()))
        elif move == _PICK_SEASONING:
            steps.append(Operator.pick(seasonings.popleft()))
        elif move == _PLACE:
            steps.append(Operator.place_in_pot())
        else:
            steps.append(Operator.noop())
    return Plan(tuple(steps), cost)


def _location_order(name: str) -> tuple[int, str]:
    digits = name.lstrip("L")
    return (int(digits), name) if digits.isdigit() else (10**9, name)


# -- agent ------------------------------------------------------------------


@dataclass
class AgentState:
    """What the agent knows exactly from its own actions."""

    held: dict[str, str] = field(default_factory=dict)
    pot: dict[str, int | None] = field(default_factory=dict)
    clock: int = 0
    emitted: set[Fluent] = field(default_factory=set)

    def apply(self, record: ActionRecord) -> None:
        for var, value in record.effects.items():
            if var.property.name != "position":
                continue
            if value == HELD:
                self.held[var.obj.name] = var.obj.type.name
            elif value == POT:
                kind = self.held.pop(var.obj.name, var.obj.type.name)
                self.pot[var.obj.name] = self.clock + 1 if kind == VEGETABLE else None
        self.clock += 1

    def cooking_remaining(self) -> int:
        remaining = [
            max(0, COOK_TIME - (self.clock - stamp))
            for stamp in self.pot.values()
            if stamp is not None
        ]
        return max(remaining, default=0)

    def planning_state(self, hypothesis: Mapping[StateVariable, Any]) -> PlanningState:
        """Union of hypothesized location contents and hypothesized ingredient positions."""
        targets: dict[str, str] = {}
        for var, value in hypothesis.items():
            if var.property.name == "contents" and value != EMPTY:
                targets[var.obj.name] = str(value)
        for var, value in hypothesis.items():
            if var.property.name != "position" or var.obj.name in self.held:
                continue
            if var.obj.name in self.pot or value in (HELD, POT):
                continue
            targets[str(value)] = var.obj.type.name
        vegetables = sorted((l for l, k in targets.items() if k == VEGETABLE), key=_location_order)
        seasonings = sorted((l for l, k in targets.items() if k == SEASONING), key=_location_order)
        held_kinds = list(self.held.values())
        return PlanningState(
            tuple(vegetables),
            tuple(seasonings),
            held_kinds.count(VEGETABLE),
            held_kinds.count(SEASONING),
            self.cooking_remaining(),
        )

    def background_fluents(self, belief: BeliefState) -> Observation:
        """Fluents the agent can infer from its belief by domain knowledge.

        An empty location rules itself out as the position of every tracked
        ingredient; an ingredient pinned to a location fixes that location's
        contents. Each fluent is emitted once per episode.
        """
        contents = {v.obj.name: v for v in belief.variables() if v.property.name == "contents"}
        positions = [
            v
            for v in belief.variables()
            if v.property.name == "position"
            and v.obj.name not in self.held
            and v.obj.name not in self.pot
        ]
        empty = set()
        for name, var in contents.items():
            marginal = belief.marginal([var])
            if marginal.is_point_mass() and marginal.most_likely()[0] == EMPTY:
                empty.add(name)
        entries: list[tuple[Fluent, float]] = []
        for var in positions:
            marginal = belief.marginal([var])
            for location in sorted(empty, key=_location_order):
                if marginal.prob((location,)) > 0.0:
                    entries.append((Fluent(DIFFERENT, (var, location)), 1.0))
            if marginal.is_point_mass():
                location = marginal.most_likely()[0]
                target = contents.get(str(location))
                if target is not None:
                    entries.append(
                        (Fluent(EQUAL, (target, var.obj.type.name)), 1.0)
                    )
        fresh = [(f, p) for f, p in entries if f not in self.emitted]
        self.emitted.update(f for f, _ in fresh)
        return Observation(tuple(fresh))


def contradicts(hypothesis: Mapping[StateVariable, Any], observation: Observation) -> bool:
    """True when a certain fluent is false under (or not covered by) the hypothesis."""
    for fluent, p in observation:
        if p < 1.0:
            continue
        if any(v not in hypothesis for v in fluent.variables):
            return True
        if not evaluate(fluent, hypothesis):
            return True
    return False


# -- episodes ---------------------------------------------------------------


@dataclass
class EpisodeResult:
    """Per-episode metrics."""

    seed: int
    representation: str
    solved: bool = False
    timed_out: bool = False
    total_cost: float = 0.0
    steps: int = 0
    replans: int = 0
    determinize_failures: int = 0
    belief_updates: int = 0
    belief_update_time_mean_s: float = 0.0
    belief_update_time_total_s: float = 0.0
    n_queries: int = 0
    query_time_s: float = 0.0
    queries_per_second: float = 0.0
    n_factors_mean: float = 0.0
    mean_factor_size: float = 0.0
    max_factor_size: int = 0
    n_complex_fluents: int = 0
    skipped_contradictions: int = 0
    wall_time_s: float = 0.0

    TIMING_FIELDS: ClassVar[tuple[str, ...]] = (
        "belief_update_time_mean_s",
        "belief_update_time_total_s",
        "query_time_s",
        "queries_per_second",
        "wall_time_s",
    )

    def to_dict(self, include_timings: bool = True) -> dict[str, Any]:
        data = asdict(self)
        if not include_timings:
            for name in self.TIMING_FIELDS:
                data.pop(name, None)
        return data


def execute_episode(
    env: CookingEnv,
    belief: BeliefState,
    rng: np.random.Generator,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    step_cap: int = DEFAULT_STEP_CAP,
    seed: int = 0,
    on_contradiction: str = "skip",
) -> EpisodeResult:
    """Run determinize-plan-execute until the goal, the timeout or the step cap."""
    result = EpisodeResult(seed=seed, representation=belief.representation.value)
    agent = AgentState()
    update_times: list[float] = []
    factor_counts: list[int] = []
    factor_sizes: list[float] = []
    start = time.perf_counter()

    def absorb(observation: Observation, record: ActionRecord | None) -> None:
        t0 = time.perf_counter()
        # Observations describe the world after the step
        if record is not None:
            belief.update(Observation(), record, on_contradiction)
        belief.update(observation, None, on_contradiction)
        background = agent.background_fluents(belief)
        if len(background):
            belief.update(background, None, on_contradiction)
        update_times.append(time.perf_counter() - t0)
        stats = belief.stats()
        factor_counts.append(stats.n_factors)
        factor_sizes.append(stats.mean_factor_size)
        result.max_factor_size = max(result.max_factor_size, stats.max_factor_size)

    absorb(env.initial_observation(), None)
    queue: deque[Operator] = deque()
    hypothesis: dict[StateVariable, Any] = {}

    while True:
        if env.goal_reached():
            result.solved = True
            break
        if time.perf_counter() - start > timeout_s:
            result.timed_out = True
            logger.warning("Episode %d timed out after %d steps", seed, result.steps)
            break
        if result.steps >= step_cap:
            logger.warning("Episode %d hit the step cap of %d", seed, step_cap)
            break

        if not queue:
            try:
                hypothesis = determinize(belief, rng)
                current = plan(agent.planning_state(hypothesis))
                queue.extend(current.steps)
                result.replans += 1
            except DeterminizeError as exc:
                result.determinize_failures += 1
                logger.warning("Episode %d: %s; waiting for more information", seed, exc)
            except NoPlanError as exc:
                logger.warning("Episode %d: %s", seed, exc)
            if not queue:
                queue.append(Operator.noop())

        operator = queue.popleft()
        expected = None
        if operator.kind is OperatorKind.PICK:
            expected = next(
                (
                    value
                    for var, value in hypothesis.items()
                    if var.property.name == "contents" and var.obj.name == operator.location
                ),
                None,
            )
        observation, cost, record = env.step(operator)
        result.total_cost += cost
        result.steps += 1
        agent.apply(record)
        absorb(observation, record)

        hypothesis.update(record.effects)
        replan = not record.succeeded or contradicts(hypothesis, observation)
        if operator.kind is OperatorKind.PICK and record.succeeded:
            picked = [v.obj.type.name for v, x in record.effects.items() if x == HELD]
            if expected is not None and picked and picked[0] != expected:
                replan = True
        if replan:
            queue.clear()

    stats = belief.stats()
    result.wall_time_s = time.perf_counter() - start
    result.belief_updates = len(update_times)
    result.belief_update_time_total_s = float(sum(update_times))
    result.belief_update_time_mean_s = float(np.mean(update_times)) if update_times else 0.0
    result.n_queries = stats.n_queries
    result.query_time_s = stats.query_time_s
    result.queries_per_second = stats.n_queries / stats.query_time_s if stats.query_time_s > 0 else 0.0
    result.n_factors_mean = float(np.mean(factor_counts)) if factor_counts else 0.0
    result.mean_factor_size = float(np.mean(factor_sizes)) if factor_sizes else 0.0
    result.n_complex_fluents = stats.n_complex_fluents
    result.skipped_contradictions = stats.skipped_contradictions
    return result
