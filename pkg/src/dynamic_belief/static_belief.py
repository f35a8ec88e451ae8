"""
Statically Factored Belief

The baseline representation: one singleton factor per tracked variable (the
contents of each known location), fixed at construction. Fluents that cannot
fold into a single tracked factor are stored lazily and only enforced when a
state is sampled. Variables outside the tracked set (ingredient positions) are
never conditioned; they keep their prior and are drawn at query time.
"""

from __future__ import annotations

import logging
from typing import Any, Iterable, Mapping, Sequence

from .base_belief import ActionEffects, BeliefState
from .belief_types import BeliefConfig, ComplexFluent, Factor, Representation
from .distributions import JointDistribution, validate_value
from .dynamic_belief import CONTRADICTION_POLICIES
from .errors import (
    BeliefError,
    ConfigError,
    ContradictionError,
    DuplicateVariableError,
    QuerySpansFactorsError,
    UnknownVariableError,
)
from .fluents import Fluent, Observation, StateVariable, Value, render

logger = logging.getLogger(__name__)


class StaticBelief(BeliefState):
    """Fixed singleton factoring over the tracked variables."""

    representation = Representation.STATIC

    def __init__(
        self,
        tracked: Sequence[tuple[StateVariable, JointDistribution]] = (),
        config: BeliefConfig | None = None,
    ) -> None:
        super().__init__(config)
        self._factors: dict[StateVariable, Factor] = {}
        self._loose: dict[StateVariable, JointDistribution] = {}
        self._complex: list[ComplexFluent] = []
        self._next_id = 0
        for variable, prior in tracked:
            if variable in self._factors:
                raise DuplicateVariableError(f"{variable} is already tracked")
            if prior.variables != (variable,):
                raise ValueError(f"prior for {variable} must be a single-variable distribution")
            self._set_factor(variable, prior)

    def _set_factor(self, variable: StateVariable, joint: JointDistribution) -> None:
        self._factors[variable] = Factor(self._next_id, joint)
        self._next_id += 1

    def _default_distribution(self, variable: StateVariable) -> JointDistribution:
        weights = self.config.priors.get(variable.property.name)
        if weights:
            return JointDistribution.from_weights(variable, weights)
        return JointDistribution.uniform(variable)

    def is_tracked(self, variable: StateVariable) -> bool:
        return variable in self._factors

    # -- BeliefState interface ------------------------------------------------

    def factors(self) -> list[Factor]:
        return sorted(self._factors.values(), key=lambda f: f.id)

    def complex_fluents(self) -> tuple[ComplexFluent, ...]:
        return tuple(self._complex)

    def variables(self) -> list[StateVariable]:
        return list(self._factors) + list(self._loose)

    def _sampling_joints(self) -> list[JointDistribution]:
        return [f.joint for f in self.factors()] + list(self._loose.values())

    def marginal(self, variables: Iterable[StateVariable]) -> JointDistribution:
        variables = list(dict.fromkeys(variables))
        if not variables:
            raise ValueError("marginal needs at least one variable")
        for var in variables:
            if var not in self._factors and var not in self._loose:
                raise UnknownVariableError(f"{var} is not tracked by this belief")
        if len(variables) > 1:
            raise QuerySpansFactorsError(
                f"{[str(v) for v in variables]} span several fixed factors; sample states instead"
            )
        var = variables[0]
        if var in self._loose:
            return self._loose[var]
        return self._cached_marginal(self._factors[var], variables)

    def update(
        self,
        observation: Observation,
        action: ActionEffects | None = None,
        on_contradiction: str = "raise",
    ) -> StaticBelief:
        if on_contradiction not in CONTRADICTION_POLICIES:
            raise ConfigError(
                f"on_contradiction must be one of {CONTRADICTION_POLICIES}, got {on_contradiction!r}"
            )
        checkpoint = (dict(self._factors), dict(self._loose), list(self._complex))
        try:
            for fluent, p in observation:
                self._fold_entry(fluent, p, on_contradiction)
            if action is not None:
                self.update_with_action(action)
        except BeliefError:
            self._factors, self._loose, self._complex = checkpoint
            raise
        return self

    # -- update steps ---------------------------------------------------------

    def _fold_entry(self, fluent: Fluent, p: float, on_contradiction: str) -> None:
        variables = fluent.variables
        if len(variables) == 1 and variables[0] in self._factors:
            var = variables[0]
            try:
                updated = self._factors[var].joint.jeffrey_update(fluent, p)
            except ContradictionError as exc:
                if on_contradiction == "raise":
                    raise
                self._skipped_contradictions += 1
                logger.warning(
                    "Skipping contradictory assertion %s (p=%s): %s", render(fluent), p, exc
                )
                return
            if updated is not self._factors[var].joint:
                self._set_factor(var, updated)
            return
        for var in variables:
            if var not in self._factors and var not in self._loose:
                self._loose[var] = self._default_distribution(var)
        item = ComplexFluent(fluent, p)
        if item not in self._complex:
            self._complex.append(item)
            logger.debug("Stored %s lazily (does not fit the fixed factoring)", render(fluent))

    def update_with_action(self, action: ActionEffects | Mapping[StateVariable, Value]) -> None:
        """Point-mass overwrite of effected variables; stale stored fluents are dropped."""
        effects = action if isinstance(action, Mapping) else action.effects
        for var, value in effects.items():
            validate_value(var, value)
        for var, value in effects.items():
            point = JointDistribution.point(var, value)
            if var in self._factors:
                self._set_factor(var, point)
            else:
                self._loose[var] = point
        if effects:
            before = len(self._complex)
            self._complex = [
                c for c in self._complex if not any(v in effects for v in c.fluent.variables)
            ]
            if len(self._complex) != before:
                logger.debug(
                    "Dropped %d stored fluents made stale by action effects",
                    before - len(self._complex),
                )

    def snapshot(self) -> dict[str, Any]:
        data = super().snapshot()
        data["loose"] = sorted(
            (
                {
                    "variable": str(var),
                    "table": [[list(v), p] for v, p in prior.items(nonzero=True)],
                }
                for var, prior in self._loose.items()
            ),
            key=lambda entry: entry["variable"],
        )
        return data


def init_static_belief(
    tracked: Sequence[tuple[StateVariable, JointDistribution]] = (),
    config: BeliefConfig | None = None,
) -> StaticBelief:
    return StaticBelief(tracked, config)
