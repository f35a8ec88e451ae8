"""
Dynamically Factored Belief

The belief is a partition of the known state variables into factors, each
owning one joint table, plus a store of fluents that were too expensive to
fold. Incoming fluents join the factors they mention and are folded with
Jeffrey's rule; factors are split again whenever a variable can be pulled out
with a Jensen-Shannon reconstruction error below epsilon.
"""

from __future__ import annotations

import logging
from typing import Iterable, Mapping, Sequence

from .base_belief import ActionEffects, BeliefState
from .belief_types import BeliefConfig, ComplexFluent, Factor, Representation
from .distributions import JointDistribution, js_divergence, validate_value
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

CONTRADICTION_POLICIES = ("raise", "skip")


def is_too_big(factor_sizes: Iterable[int], config: BeliefConfig | int) -> bool:
    """True iff the product of table sizes exceeds the join limit.

    Stops multiplying as soon as the limit is crossed, so arbitrarily many
    large factors never build a huge integer.
    """
    limit = config if isinstance(config, int) else config.max_joint_entries
    product = 1
    for size in factor_sizes:
        product *= int(size)
        if product > limit:
            return True
    return False


class DynamicBelief(BeliefState):
    """Belief whose factoring follows the constraints it has absorbed."""

    representation = Representation.DYNAMIC

    def __init__(self, config: BeliefConfig | None = None) -> None:
        super().__init__(config)
        self._factors: dict[int, Factor] = {}
        self._var_index: dict[StateVariable, int] = {}
        self._complex: list[ComplexFluent] = []
        self._next_id = 0

    # -- bookkeeping ----------------------------------------------------------

    def _add_factor(self, joint: JointDistribution) -> Factor:
        factor = Factor(self._next_id, joint)
        self._next_id += 1
        self._factors[factor.id] = factor
        for var in joint.variables:
            self._var_index[var] = factor.id
        return factor

    def _remove_factor(self, factor_id: int) -> Factor:
        factor = self._factors.pop(factor_id)
        for var in factor.variables:
            if self._var_index.get(var) == factor_id:
                del self._var_index[var]
        return factor

    def _checkpoint(self) -> tuple:
        return (
            dict(self._factors),
            dict(self._var_index),
            list(self._complex),
            self._next_id,
        )

    def _restore(self, checkpoint: tuple) -> None:
        factors, var_index, complex_fluents, next_id = checkpoint
        self._factors = factors
        self._var_index = var_index
        self._complex = complex_fluents
        # Ids handed out since the checkpoint are not reused
        self._next_id = max(self._next_id, next_id)

    def default_distribution(self, variable: StateVariable) -> JointDistribution:
        weights = self.config.priors.get(variable.property.name)
        if weights:
            return JointDistribution.from_weights(variable, weights)
        return JointDistribution.uniform(variable)

    def add_variable(
        self, variable: StateVariable, prior: JointDistribution | None = None
    ) -> Factor:
        """Track a new variable as a singleton factor."""
        if variable in self._var_index:
            raise DuplicateVariableError(f"{variable} is already tracked")
        if prior is None:
            prior = self.default_distribution(variable)
        elif prior.variables != (variable,):
            raise ValueError(f"prior for {variable} must be a single-variable distribution")
        return self._add_factor(prior)

    def factor_of(self, variable: StateVariable) -> Factor:
        try:
            return self._factors[self._var_index[variable]]
        except KeyError:
            raise UnknownVariableError(f"{variable} is not tracked by this belief") from None

    def __contains__(self, variable: object) -> bool:
        return variable in self._var_index

    # -- BeliefState interface ------------------------------------------------

    def factors(self) -> list[Factor]:
        return [self._factors[i] for i in sorted(self._factors)]

    def complex_fluents(self) -> tuple[ComplexFluent, ...]:
        return tuple(self._complex)

    def variables(self) -> list[StateVariable]:
        return list(self._var_index)

    def marginal(self, variables: Iterable[StateVariable]) -> JointDistribution:
        variables = list(dict.fromkeys(variables))
        if not variables:
            raise ValueError("marginal needs at least one variable")
        factor_ids = set()
        for var in variables:
            if var not in self._var_index:
                raise UnknownVariableError(f"{var} is not tracked by this belief")
            factor_ids.add(self._var_index[var])
        if len(factor_ids) > 1:
            raise QuerySpansFactorsError(
                f"{[str(v) for v in variables]} span {len(factor_ids)} factors; "
                "sample states instead"
            )
        return self._cached_marginal(self._factors[factor_ids.pop()], variables)

    def update(
        self,
        observation: Observation,
        action: ActionEffects | None = None,
        on_contradiction: str = "raise",
    ) -> DynamicBelief:
        if on_contradiction not in CONTRADICTION_POLICIES:
            raise ConfigError(
                f"on_contradiction must be one of {CONTRADICTION_POLICIES}, got {on_contradiction!r}"
            )
        checkpoint = self._checkpoint()
        try:
            for fluent, p in observation:
                self._fold_entry(fluent, p, on_contradiction)
            if action is not None:
                self.update_with_action(action)
            for factor_id in sorted(self._factors):
                if factor_id in self._factors:
                    self.try_split(factor_id)
        except BeliefError:
            self._restore(checkpoint)
            raise
        return self

    # -- update steps -----------------------------------------------------------

    def _fold_entry(self, fluent: Fluent, p: float, on_contradiction: str) -> None:
        for var in fluent.variables:
            if var not in self._var_index:
                self.add_variable(var)
        factor_ids = list(dict.fromkeys(self._var_index[v] for v in fluent.variables))
        if len(factor_ids) > 1 and is_too_big(
            (self._factors[i].size for i in factor_ids), self.config
        ):
            self._store_complex(fluent, p)
            return
        try:
            self.join_factors_and_update(fluent, p)
        except ContradictionError as exc:
            if on_contradiction == "raise":
                raise
            self._skipped_contradictions += 1
            logger.warning("Skipping contradictory assertion %s (p=%s): %s", render(fluent), p, exc)

    def _store_complex(self, fluent: Fluent, p: float) -> None:
        item = ComplexFluent(fluent, p)
        if item not in self._complex:
            self._complex.append(item)
            logger.debug("Stored %s lazily (joint too big)", render(fluent))

    def join_factors_and_update(self, fluent: Fluent, p: float) -> Factor:
        """Merge the factors mentioned by the fluent and fold it with Jeffrey's rule.

        The merged table is computed before anything is replaced, so a
        contradiction leaves the belief untouched.
        """
        for var in fluent.variables:
            if var not in self._var_index:
                raise UnknownVariableError(f"{var} is not tracked by this belief")
        factor_ids = list(dict.fromkeys(self._var_index[v] for v in fluent.variables))
        joint = JointDistribution.join(self._factors[i].joint for i in factor_ids)
        updated = joint.jeffrey_update(fluent, p)
        if len(factor_ids) == 1 and updated is joint:
            return self._factors[factor_ids[0]]

        # Stored fluents whose variables now all live in the merged factor
        resolved: list[ComplexFluent] = []
        if len(factor_ids) > 1:
            members = set(updated.variables)
            resolved = [c for c in self._complex if set(c.fluent.variables) <= members]
            for item in resolved:
                updated = updated.jeffrey_update(item.fluent, item.p)

        for factor_id in factor_ids:
            self._remove_factor(factor_id)
        if resolved:
            self._complex = [c for c in self._complex if c not in resolved]
        factor = self._add_factor(updated)
        logger.debug(
            "Folded %s (p=%s) into factor %d over %d variables (%d stored fluents resolved)",
            render(fluent),
            p,
            factor.id,
            len(factor.variables),
            len(resolved),
        )
        return factor

    def try_split(self, factor_id: int) -> list[Factor]:
        """Pull variables out of a factor while the reconstruction error stays below epsilon."""
        if factor_id not in self._factors:
            raise UnknownVariableError(f"no factor with id {factor_id}")
        epsilon = self.config.epsilon
        current = self._factors[factor_id].joint
        pieces: list[JointDistribution] = []
        while True:
            split_this_pass = False
            for var in list(current.variables):
                if len(current.variables) == 1:
                    break
                rest = [v for v in current.variables if v != var]
                alone = current.marginal([var])
                remainder = current.marginal(rest)
                rebuilt = alone.product(remainder).reorder(current.variables)
                if js_divergence(current, rebuilt) < epsilon:
                    pieces.append(alone)
                    current = remainder
                    split_this_pass = True
            if not (self.config.split_to_fixpoint and split_this_pass):
                break
        if not pieces:
            return [self._factors[factor_id]]
        pieces.append(current)
        self._remove_factor(factor_id)
        produced = [self._add_factor(piece) for piece in pieces]
        logger.debug("Split factor %d into %d pieces", factor_id, len(produced))
        return produced

    def update_with_action(self, action: ActionEffects | Mapping[StateVariable, Value]) -> None:
        """Overwrite effected variables with point masses.

        Each effected variable leaves its factor; the remainder keeps its
        marginal. Stored fluents mentioning an effected variable describe the
        state before the action and are dropped.
        """
        effects = action if isinstance(action, Mapping) else action.effects
        for var, value in effects.items():
            validate_value(var, value)
        for var, value in effects.items():
            point = JointDistribution.point(var, value)
            if var in self._var_index:
                factor = self._remove_factor(self._var_index[var])
                rest = [v for v in factor.variables if v != var]
                if rest:
                    self._add_factor(factor.joint.marginal(rest))
            self._add_factor(point)
        if effects:
            stale = [c for c in self._complex if any(v in effects for v in c.fluent.variables)]
            if stale:
                self._complex = [c for c in self._complex if c not in stale]
                logger.debug("Dropped %d stored fluents made stale by action effects", len(stale))

    # -- invariants -------------------------------------------------------------

    def check_invariants(self) -> None:
        """Raise BeliefError if the factors do not partition the variables."""
        seen: dict[StateVariable, int] = {}
        for factor in self._factors.values():
            for var in factor.variables:
                if var in seen:
                    raise BeliefError(f"{var} appears in factors {seen[var]} and {factor.id}")
                seen[var] = factor.id
        if seen != self._var_index:
            raise BeliefError("variable index is out of sync with the factors")
        for item in self._complex:
            owners = {self._var_index.get(v) for v in item.fluent.variables}
            if len(owners) == 1 and None not in owners:
                raise BeliefError(f"stored fluent {render(item.fluent)} lies inside one factor")


def init_belief(
    known: Sequence[tuple[StateVariable, JointDistribution]] = (),
    config: BeliefConfig | None = None,
) -> DynamicBelief:
    """One singleton factor per a-priori known variable; no stored fluents."""
    belief = DynamicBelief(config)
    for variable, prior in known:
        belief.add_variable(variable, prior)
    return belief


def belief_update(
    belief: BeliefState,
    observation: Observation,
    action: ActionEffects | None = None,
    on_contradiction: str = "raise",
) -> BeliefState:
    return belief.update(observation, action, on_contradiction)
