"""
Gridworld Cooking Domain

A grid of locations, each holding one ingredient (a vegetable or a seasoning)
or nothing. The robot observes and picks at locations, holds up to ten
ingredients, and places everything it holds into a pot. Vegetables cook five
timesteps after entering the pot; the goal is every ingredient in the pot with
every vegetable cooked.

Besides the simulator this module provides the assertion generator (a
uniformly drawn true fluent per timestep, or a false one with probability
1 - p in noisy mode), the goal test and the schema and belief factories used
by the planner and the benchmark harness.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .base_belief import BeliefState
from .belief_types import BeliefConfig, Representation
from .distributions import JointDistribution
from .dynamic_belief import init_belief
from .errors import CapacityError, ConfigError, DomainError
from .fluents import (
    Fluent,
    ObjectType,
    Observation,
    PropertySchema,
    Schema,
    StateVariable,
    Value,
    evaluate,
    grid_domain,
)
from .static_belief import StaticBelief

logger = logging.getLogger(__name__)

VEGETABLE = "vegetable"
SEASONING = "seasoning"
EMPTY = "empty"
HELD = "held"
POT = "pot"
CONTENTS_DOMAIN = (VEGETABLE, SEASONING, EMPTY)

OBSERVE_COST = 5.0
PICK_COST = 20.0
PLACE_BASE_COST = 100.0
PLACE_PER_ITEM_COST = 50.0
SEASONING_PENALTY = 1000.0
LIVING_COST = 10.0
COOK_TIME = 5
MAX_HELD = 10

TEMPLATES = (
    "contents_equal",
    "contents_same",
    "contents_different",
    "position_equal",
    "position_next_to",
    "position_in",
)


@dataclass(frozen=True)
class WorldConfig:
    """Settings of one cooking world."""

    grid_rows: int = 4
    grid_cols: int = 4
    n_vegetables: int = 3
    n_seasonings: int = 3
    assertion_p: float = 1.0
    seed: int = 0
    templates: tuple[str, ...] = TEMPLATES

    def __post_init__(self) -> None:
        if self.grid_rows <= 0 or self.grid_cols <= 0:
            raise ConfigError("grid dimensions must be positive")
        if self.n_vegetables < 0 or self.n_seasonings < 0:
            raise ConfigError("ingredient counts must be non-negative")
        if self.n_ingredients > self.grid_rows * self.grid_cols:
            raise ConfigError(
                f"{self.n_ingredients} ingredients do not fit on a "
                f"{self.grid_rows}x{self.grid_cols} grid"
            )
        if not 0.0 < self.assertion_p <= 1.0:
            raise ConfigError(f"assertion_p must lie in (0, 1], got {self.assertion_p}")
        object.__setattr__(self, "templates", tuple(self.templates))
        unknown = set(self.templates) - set(TEMPLATES)
        if unknown:
            raise ConfigError(f"unknown assertion templates: {sorted(unknown)}")

    @property
    def n_ingredients(self) -> int:
        return self.n_vegetables + self.n_seasonings

    @property
    def n_locations(self) -> int:
        return self.grid_rows * self.grid_cols


def location_names(rows: int, cols: int) -> list[str]:
    return [f"L{i}" for i in range(rows * cols)]


def build_schema(rows: int, cols: int) -> Schema:
    """Location, vegetable and seasoning types; locations registered up front.

    Ingredients are not registered: they are discovered through assertions.
    """
    contents = PropertySchema("contents", CONTENTS_DOMAIN)
    values, coords = grid_domain(rows, cols, "L", extra=(HELD, POT))
    position = PropertySchema("position", values, coords)
    schema = Schema(
        [
            ObjectType("location", (contents,), prefix="L"),
            ObjectType(VEGETABLE, (position,), prefix="veg"),
            ObjectType(SEASONING, (position,), prefix="seas"),
        ]
    )
    for name in location_names(rows, cols):
        schema.add_object(name, "location")
    return schema


def grid_regions(rows: int, cols: int) -> list[frozenset[str]]:
    """Full rows, full columns and 2x2 blocks, without duplicates."""
    regions: list[frozenset[str]] = []

    def add(cells: Iterable[tuple[int, int]]) -> None:
        region = frozenset(f"L{r * cols + c}" for r, c in cells)
        if region not in regions:
            regions.append(region)

    for r in range(rows):
        add((r, c) for c in range(cols))
    for c in range(cols):
        add((r, c) for r in range(rows))
    for r in range(rows - 1):
        for c in range(cols - 1):
            add([(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)])
    return regions


class OperatorKind(Enum):
    OBSERVE = "Observe"
    PICK = "Pick"
    PLACE_IN_POT = "PlaceInPot"
    NOOP = "NoOp"


@dataclass(frozen=True)
class Operator:
    kind: OperatorKind
    location: str | None = None

    def __post_init__(self) -> None:
        needs_location = self.kind in (OperatorKind.OBSERVE, OperatorKind.PICK)
        if needs_location and self.location is None:
            raise DomainError(f"{self.kind.value} needs a location")
        if not needs_location and self.location is not None:
            raise DomainError(f"{self.kind.value} takes no location")

    @classmethod
    def observe(cls, location: str) -> Operator:
        return cls(OperatorKind.OBSERVE, location)

    @classmethod
    def pick(cls, location: str) -> Operator:
        return cls(OperatorKind.PICK, location)

    @classmethod
    def place_in_pot(cls) -> Operator:
        return cls(OperatorKind.PLACE_IN_POT)

    @classmethod
    def noop(cls) -> Operator:
        return cls(OperatorKind.NOOP)

    def __str__(self) -> str:
        if self.location is None:
            return self.kind.value
        return f"{self.kind.value}({self.location})"


@dataclass
class ActionRecord:
    """An executed operator with its deterministic effects and charged cost."""

    operator: Operator
    effects: dict[StateVariable, Value] = field(default_factory=dict)
    cost: float = 0.0
    succeeded: bool = True


@dataclass
class HiddenWorld:
    """Ground-truth world state. Mutated in place by ``step``."""

    rows: int
    cols: int
    schema: Schema
    contents: dict[str, str | None]
    kinds: dict[str, str]
    held: list[str] = field(default_factory=list)
    pot: dict[str, int | None] = field(default_factory=dict)
    clock: int = 0
    robot_at: str | None = None
    _groundings: list[tuple[str, Fluent, tuple[str, ...]]] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def locations(self) -> list[str]:
        return location_names(self.rows, self.cols)

    @property
    def ingredients(self) -> list[str]:
        return list(self.kinds)

    def contents_value(self, location: str) -> str:
        ingredient = self.contents[location]
        return EMPTY if ingredient is None else self.kinds[ingredient]

    def position(self, ingredient: str) -> str:
        if ingredient in self.pot:
            return POT
        if ingredient in self.held:
            return HELD
        for location, occupant in self.contents.items():
            if occupant == ingredient:
                return location
        raise KeyError(ingredient)

    def on_grid(self, ingredient: str) -> bool:
        return ingredient not in self.pot and ingredient not in self.held

    def is_cooked(self, ingredient: str) -> bool:
        stamp = self.pot.get(ingredient)
        return stamp is not None and self.clock - stamp >= COOK_TIME

    def all_vegetables_cooked(self) -> bool:
        return all(
            self.is_cooked(name) for name, kind in self.kinds.items() if kind == VEGETABLE
        )

    def contents_var(self, location: str) -> StateVariable:
        return self.schema.variable("contents", location)

    def position_var(self, ingredient: str) -> StateVariable:
        return self.schema.variable("position", ingredient)

    def assignment(self) -> dict[StateVariable, Value]:
        """Total assignment of every contents and position variable."""
        values: dict[StateVariable, Value] = {
            self.contents_var(loc): self.contents_value(loc) for loc in self.locations
        }
        for ingredient in self.kinds:
            values[self.position_var(ingredient)] = self.position(ingredient)
        return values

    def copy(self) -> HiddenWorld:
        clone = copy.copy(self)
        clone.contents = dict(self.contents)
        clone.held = list(self.held)
        clone.pot = dict(self.pot)
        return clone


def generate_world(config: WorldConfig, rng: np.random.Generator) -> HiddenWorld:
    """Place ``veg0..`` and ``seas0..`` on distinct uniformly drawn locations."""
    schema = build_schema(config.grid_rows, config.grid_cols)
    locations = location_names(config.grid_rows, config.grid_cols)
    kinds = {f"veg{i}": VEGETABLE for i in range(config.n_vegetables)}
    kinds.update({f"seas{i}": SEASONING for i in range(config.n_seasonings)})
    for name, kind in kinds.items():
        schema.add_object(name, kind)
    chosen = rng.choice(len(locations), size=len(kinds), replace=False)
    contents: dict[str, str | None] = {loc: None for loc in locations}
    for name, index in zip(kinds, chosen):
        contents[locations[int(index)]] = name
    return HiddenWorld(config.grid_rows, config.grid_cols, schema, contents, kinds)


def _check_location(world: HiddenWorld, location: str | None) -> str:
    if location not in world.contents:
        raise DomainError(f"location {location!r} is not on the {world.rows}x{world.cols} grid")
    return location


def step(world: HiddenWorld, operator: Operator) -> tuple[Observation, float, ActionRecord]:
    """Apply one operator. Every step also charges the living cost."""
    schema = world.schema
    entries: list[tuple[Fluent, float]] = []
    record = ActionRecord(operator)
    kind = operator.kind

    if kind is OperatorKind.OBSERVE:
        location = _check_location(world, operator.location)
        world.robot_at = location
        entries.append(
            (schema.fluent("Equal", world.contents_var(location), world.contents_value(location)), 1.0)
        )
        occupant = world.contents[location]
        if occupant is not None:
            entries.append((schema.fluent("Equal", world.position_var(occupant), location), 1.0))
        cost = OBSERVE_COST

    elif kind is OperatorKind.PICK:
        location = _check_location(world, operator.location)
        if len(world.held) >= MAX_HELD:
            raise CapacityError(f"already holding {MAX_HELD} ingredients")
        world.robot_at = location
        occupant = world.contents[location]
        if occupant is None:
            record.succeeded = False
            entries.append((schema.fluent("Equal", world.contents_var(location), EMPTY), 1.0))
        else:
            world.contents[location] = None
            world.held.append(occupant)
            record.effects = {
                world.contents_var(location): EMPTY,
                world.position_var(occupant): HELD,
            }
        cost = PICK_COST

    elif kind is OperatorKind.PLACE_IN_POT:
        placing = list(world.held)
        cost = PLACE_BASE_COST + PLACE_PER_ITEM_COST * len(placing)
        if any(world.kinds[i] == SEASONING for i in placing) and not world.all_vegetables_cooked():
            cost += SEASONING_PENALTY
        for ingredient in placing:
            world.pot[ingredient] = world.clock + 1 if world.kinds[ingredient] == VEGETABLE else None
        world.held.clear()
        record.effects = {world.position_var(i): POT for i in placing}

    else:
        cost = 0.0

    cost += LIVING_COST
    world.clock += 1
    record.cost = cost
    return Observation(tuple(entries)), cost, record


def goal_test(world: HiddenWorld) -> bool:
    """Every ingredient in the pot and every vegetable cooked."""
    return all(i in world.pot for i in world.kinds) and world.all_vegetables_cooked()


# -- assertions ---------------------------------------------------------------


def _build_groundings(world: HiddenWorld) -> list[tuple[str, Fluent, tuple[str, ...]]]:
    schema = world.schema
    locations = world.locations
    ingredients = world.ingredients
    out: list[tuple[str, Fluent, tuple[str, ...]]] = []
    contents = [world.contents_var(loc) for loc in locations]
    for var in contents:
        for value in CONTENTS_DOMAIN:
            out.append(("contents_equal", schema.fluent("Equal", var, value), ()))
    for i, a in enumerate(contents):
        for b in contents[i + 1 :]:
            out.append(("contents_same", schema.fluent("Same", a, b), ()))
            out.append(("contents_different", schema.fluent("Different", a, b), ()))
    for name in ingredients:
        var = world.position_var(name)
        for loc in locations:
            out.append(("position_equal", schema.fluent("Equal", var, loc), (name,)))
    for i, a in enumerate(ingredients):
        for b in ingredients[i + 1 :]:
            fluent = schema.fluent("NextTo", world.position_var(a), world.position_var(b))
            out.append(("position_next_to", fluent, (a, b)))
    regions = grid_regions(world.rows, world.cols)
    for name in ingredients:
        var = world.position_var(name)
        for region in regions:
            out.append(("position_in", schema.fluent("In", var, region), (name,)))
    return out


def all_instantiations(
    world: HiddenWorld, templates: Iterable[str] = TEMPLATES
) -> list[Fluent]:
    """Every template grounding over the locations and the ingredients still on the grid."""
    if world._groundings is None:
        world._groundings = _build_groundings(world)
    wanted = set(templates)
    return [
        fluent
        for template, fluent, needs in world._groundings
        if template in wanted and all(world.on_grid(i) for i in needs)
    ]


def valid_assertions(world: HiddenWorld, templates: Iterable[str] = TEMPLATES) -> list[Fluent]:
    """Instantiations true in the world, in a deterministic order."""
    truth = world.assignment()
    return [f for f in all_instantiations(world, templates) if evaluate(f, truth)]


def sample_assertion(
    world: HiddenWorld,
    rng: np.random.Generator,
    p: float,
    templates: Iterable[str] = TEMPLATES,
) -> tuple[Fluent, float] | None:
    """Uniformly drawn true assertion labeled with confidence ``p``.

    With probability 1 - p a uniformly drawn false instantiation is emitted
    instead, still labeled ``p``. Returns None when nothing can be asserted.
    """
    templates = tuple(templates)
    truth = world.assignment()
    candidates = all_instantiations(world, templates)
    valid = [f for f in candidates if evaluate(f, truth)]
    if p < 1.0 and rng.random() >= p:
        false = [f for f in candidates if not evaluate(f, truth)]
        if false:
            return false[int(rng.integers(len(false)))], p
    if not valid:
        return None
    return valid[int(rng.integers(len(valid)))], p


# -- beliefs and environment --------------------------------------------------


def position_prior(rows: int, cols: int) -> dict[Value, float]:
    return {loc: 1.0 for loc in location_names(rows, cols)}


def initial_belief(
    config: WorldConfig,
    representation: Representation | str = Representation.DYNAMIC,
    belief_config: BeliefConfig | None = None,
) -> BeliefState:
    """Uniform contents singletons per location; ingredient positions uniform over the grid."""
    representation = Representation.parse(representation)
    belief_config = belief_config or BeliefConfig()
    priors = dict(belief_config.priors)
    priors.setdefault("position", position_prior(config.grid_rows, config.grid_cols))
    belief_config = replace(belief_config, priors=priors)

    schema = build_schema(config.grid_rows, config.grid_cols)
    known = [
        (var, JointDistribution.uniform(var))
        for var in (
            schema.variable("contents", loc)
            for loc in location_names(config.grid_rows, config.grid_cols)
        )
    ]
    if representation is Representation.STATIC:
        return StaticBelief(known, belief_config)
    return init_belief(known, belief_config)


class CookingEnv:
    """Hidden world plus the assertion stream the agent receives each timestep."""

    def __init__(self, config: WorldConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.rng = rng
        self.world = generate_world(config, rng)
        self.total_cost = 0.0

    def _assertion(self) -> Observation:
        entry = sample_assertion(self.world, self.rng, self.config.assertion_p, self.config.templates)
        return Observation() if entry is None else Observation.of(entry)

    def initial_observation(self) -> Observation:
        return self._assertion()

    def step(self, operator: Operator) -> tuple[Observation, float, ActionRecord]:
        observation, cost, record = step(self.world, operator)
        self.total_cost += cost
        return observation.merged(self._assertion()), cost, record

    def goal_reached(self) -> bool:
        return goal_test(self.world)

    def kind_of(self, ingredient: str) -> str:
        return self.world.kinds[ingredient]

    def truth(self) -> Mapping[StateVariable, Value]:
        return self.world.assignment()
