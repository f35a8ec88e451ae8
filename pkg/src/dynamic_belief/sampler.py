"""
Backtracking State Sampler

Draws a world state consistent with every lazily stored fluent by sampling
factor by factor (smallest tables first) and backtracking when a factor's
retry budget runs out. Only fluents whose variables are all assigned are
checked, each at the position where its last variable gets a value.
"""

from __future__ import annotations

import logging
from typing import Any, Sequence

import numpy as np

from .belief_types import ComplexFluent
from .distributions import JointDistribution
from .errors import SearchExhaustedError
from .fluents import StateVariable, evaluate

logger = logging.getLogger(__name__)


def sample_consistent_state(
    joints: Sequence[JointDistribution],
    complex_fluents: Sequence[ComplexFluent],
    rng: np.random.Generator,
    sample_limit_per_factor: int,
    max_backtrack_steps: int,
) -> dict[StateVariable, Any]:
    """Sample a total assignment of the joints' variables.

    Raises SearchExhaustedError once ``max_backtrack_steps`` draws have been
    spent; that signals an over-constrained or unlucky search, not proof of
    inconsistency.
    """
    order = sorted(range(len(joints)), key=lambda i: joints[i].size)
    ordered = [joints[i] for i in order]
    position: dict[StateVariable, int] = {}
    for idx, joint in enumerate(ordered):
        for var in joint.variables:
            position[var] = idx

    # Fluents to check once the factor at each position has been drawn
    checks: list[list[ComplexFluent]] = [[] for _ in ordered]
    for item in complex_fluents:
        slots = [position.get(v) for v in item.fluent.variables]
        if any(s is None for s in slots):
            # Never fully grounded, so never checked
            continue
        checks[max(s for s in slots if s is not None)].append(item)

    state: dict[StateVariable, Any] = {}
    attempts = [0] * len(ordered)
    idx = 0
    steps = 0
    while idx < len(ordered):
        if idx < 0:
            # Backtracked past the first factor: start over
            idx = 0
            attempts[0] = 0
        joint = ordered[idx]
        if attempts[idx] >= sample_limit_per_factor:
            for var in joint.variables:
                state.pop(var, None)
            attempts[idx] = 0
            idx -= 1
            continue
        steps += 1
        if steps > max_backtrack_steps:
            logger.debug(
                "Sampler exhausted after %d steps over %d factors and %d complex fluents",
                max_backtrack_steps,
                len(ordered),
                len(complex_fluents),
            )
            raise SearchExhaustedError(
                f"no consistent state found within {max_backtrack_steps} steps"
            )
        attempts[idx] += 1
        for var, value in zip(joint.variables, joint.sample(rng)):
            state[var] = value
        if any(not evaluate(item.fluent, state) for item in checks[idx]):
            continue
        idx += 1
        if idx < len(ordered):
            attempts[idx] = 0
    return state
