"""
Abstract Base Belief

This module contains the abstract base class that defines the interface for
all belief representations. The planner and the benchmark harness use this
interface to update beliefs and answer queries without knowing whether the
factoring underneath is dynamic or fixed.

The interface is designed to support:
- Observation/action updates with per-fluent contradiction handling
- Marginal queries on subsets of a single factor
- Consistent world-state sampling (the planner's query workload)
- Canonical snapshots for golden-file comparisons
- Statistics for monitoring and benchmarking
"""

from __future__ import annotations

import json
import time
from abc import ABC, abstractmethod
from typing import Any, Iterable, Mapping, Protocol, Sequence

import numpy as np
from cacheout import Cache

from .belief_types import BeliefConfig, BeliefStats, ComplexFluent, Factor, Representation
from .distributions import JointDistribution
from .fluents import Observation, StateVariable, Value, render
from .sampler import sample_consistent_state


class ActionEffects(Protocol):
    """Anything carrying deterministic effects: variable -> value."""

    @property
    def effects(self) -> Mapping[StateVariable, Value]: ...


class BeliefState(ABC):
    """
    Abstract base class for factored belief states.

    Concrete representations own a set of variable-disjoint factors and a
    store of lazily kept fluents. Sampling, most-likely queries, snapshots and
    query accounting are shared here.
    """

    representation: Representation

    def __init__(self, config: BeliefConfig | None = None) -> None:
        self.config = config or BeliefConfig()
        self._marginal_cache = Cache(maxsize=max(self.config.marginal_cache_size, 1))
        self._n_queries = 0
        self._query_time_s = 0.0
        self._skipped_contradictions = 0

    # -- interface ------------------------------------------------------------

    @abstractmethod
    def update(
        self,
        observation: Observation,
        action: ActionEffects | None = None,
        on_contradiction: str = "raise",
    ) -> BeliefState:
        """
        Fold an observation, then apply the action's effects.

        Args:
            observation: (fluent, p) pairs received this timestep
            action: Record carrying deterministic effects, or None for no-op
            on_contradiction: "raise" restores the belief and re-raises;
                "skip" drops the offending entry and keeps going

        Returns:
            The updated belief (self)
        """

    @abstractmethod
    def factors(self) -> list[Factor]:
        """Current factors, ordered by id."""

    @abstractmethod
    def complex_fluents(self) -> tuple[ComplexFluent, ...]:
        """Fluents stored lazily, in insertion order."""

    @abstractmethod
    def marginal(self, variables: Iterable[StateVariable]) -> JointDistribution:
        """
        Exact marginal over variables that all live in one factor.

        Raises:
            QuerySpansFactorsError: variables live in different factors
            UnknownVariableError: a variable is not tracked
        """

    @abstractmethod
    def variables(self) -> list[StateVariable]:
        """All state variables the belief knows about."""

    def _sampling_joints(self) -> list[JointDistribution]:
        """Distributions the sampler draws from, one per factor."""
        return [factor.joint for factor in self.factors()]

    # -- shared queries -------------------------------------------------------

    def sample_state(self, rng: np.random.Generator) -> dict[StateVariable, Any]:
        """Draw a total assignment consistent with all complex fluents."""
        start = time.perf_counter()
        try:
            return sample_consistent_state(
                self._sampling_joints(),
                self.complex_fluents(),
                rng,
                self.config.sample_limit_per_factor,
                self.config.max_backtrack_steps,
            )
        finally:
            self._n_queries += 1
            self._query_time_s += time.perf_counter() - start

    def most_likely(self, variable: StateVariable) -> Value:
        return self.marginal([variable]).most_likely()[0]

    def _cached_marginal(
        self, factor: Factor, variables: Sequence[StateVariable]
    ) -> JointDistribution:
        # Factor ids are never reused, so (id, variables) keys cannot go stale
        key = (factor.id, tuple(variables))
        cached = self._marginal_cache.get(key)
        if cached is None:
            cached = factor.joint.marginal(variables)
            self._marginal_cache.set(key, cached)
        return cached

    def stats(self) -> BeliefStats:
        factors = self.factors()
        sizes = [len(f.variables) for f in factors]
        return BeliefStats(
            representation=self.representation,
            n_variables=len(self.variables()),
            n_factors=len(factors),
            mean_factor_size=float(np.mean(sizes)) if sizes else 0.0,
            max_factor_size=max(sizes, default=0),
            largest_table=max((f.size for f in factors), default=0),
            n_complex_fluents=len(self.complex_fluents()),
            skipped_contradictions=self._skipped_contradictions,
            n_queries=self._n_queries,
            query_time_s=self._query_time_s,
        )

    def factor_structure(self) -> list[list[str]]:
        """Variable names per factor, canonically sorted."""
        groups = [sorted(str(v) for v in f.variables) for f in self.factors()]
        return sorted(groups)

    # -- serialization --------------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        """Canonically ordered plain-data view of factors and complex fluents."""
        factors = []
        for factor in self.factors():
            order = sorted(factor.variables, key=str)
            joint = factor.joint.reorder(order)
            factors.append(
                {
                    "variables": [str(v) for v in order],
                    "table": [
                        [list(values), prob] for values, prob in joint.items(nonzero=True)
                    ],
                }
            )
        factors.sort(key=lambda f: f["variables"])
        complex_fluents = sorted(
            ({"fluent": render(c.fluent), "p": c.p} for c in self.complex_fluents()),
            key=lambda c: (c["fluent"], c["p"]),
        )
        return {
            "representation": self.representation.value,
            "factors": factors,
            "complex_fluents": complex_fluents,
        }

    def to_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True, indent=2)
