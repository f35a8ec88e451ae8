"""Shared pytest fixtures for dynamic-belief tests."""

import numpy as np
import pytest

from dynamic_belief.belief_types import BeliefConfig
from dynamic_belief.cooking import WorldConfig, build_schema
from dynamic_belief.dynamic_belief import init_belief
from dynamic_belief.fluents import ObjectType, PropertySchema, Schema, grid_domain
from dynamic_belief.repl import DEMO_SCHEMA, BeliefSession


@pytest.fixture
def color_schema():
    """One object type with a three-colour property and a 4x4 grid location."""
    values, coords = grid_domain(4, 4)
    return Schema(
        [
            ObjectType(
                "object",
                (
                    PropertySchema("color", ("red", "green", "blue")),
                    PropertySchema("location", values, coords),
                    PropertySchema("size", (1, 2, 4, 6)),
                ),
            )
        ]
    )


@pytest.fixture
def demo_schema():
    """The REPL's default schema (colour + 3x3 location)."""
    return Schema.from_dict(DEMO_SCHEMA)


@pytest.fixture
def cooking_schema():
    """A 2x2 cooking schema with locations pre-registered."""
    return build_schema(2, 2)


@pytest.fixture
def rng():
    """A seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def belief():
    """An empty dynamically factored belief with default settings."""
    return init_belief((), BeliefConfig())


@pytest.fixture
def small_world_config():
    """A tiny noiseless world that solves in a handful of steps."""
    return WorldConfig(grid_rows=2, grid_cols=2, n_vegetables=1, n_seasonings=1, seed=0)


@pytest.fixture
def belief_session():
    """A fresh REPL session manager over the demo schema."""
    return BeliefSession(seed=7)
