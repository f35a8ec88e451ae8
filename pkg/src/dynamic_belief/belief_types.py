"""
Belief Types and Data Classes

This module contains the core data structures and enums shared by the belief
representations: the representation selector, the tuning knobs, factors and
the statistics snapshot used for monitoring and benchmarking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .distributions import JointDistribution
from .errors import ConfigError
from .fluents import Fluent, Value


class Representation(Enum):
    """Belief representation enumeration for benchmark selection."""

    DYNAMIC = "dynamic"
    STATIC = "static"

    @classmethod
    def parse(cls, value: str | Representation) -> Representation:
        if isinstance(value, Representation):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(
                f"representation must be one of {[r.value for r in cls]}, got {value!r}"
            ) from None


@dataclass(frozen=True)
class BeliefConfig:
    """Tuning knobs for belief updates and state sampling.

    Args:
        epsilon: Split threshold on the Jensen-Shannon reconstruction error.
            Comparison is strict, so 0 disables splitting altogether.
        max_joint_entries: Largest table a join may produce before the fluent
            is stored lazily instead.
        sample_limit_per_factor: Draws allowed per factor before backtracking.
        max_backtrack_steps: Global step budget of one sample_state call.
        split_to_fixpoint: Repeat the split scan until nothing changes.
        priors: Property name -> value weights used for newly seen variables
            (uniform over the domain when absent).
        marginal_cache_size: Entries kept in the per-belief marginal cache.
    """

    epsilon: float = 1e-9
    max_joint_entries: int = 10**6
    sample_limit_per_factor: int = 100
    max_backtrack_steps: int = 10**5
    split_to_fixpoint: bool = False
    priors: Mapping[str, Mapping[Value, float]] = field(default_factory=dict)
    marginal_cache_size: int = 256

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= math.log(2.0):
            raise ConfigError(f"epsilon must lie in [0, ln 2], got {self.epsilon}")
        for name in ("max_joint_entries", "sample_limit_per_factor", "max_backtrack_steps"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.marginal_cache_size < 0:
            raise ConfigError("marginal_cache_size must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BeliefConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown belief config fields: {sorted(unknown)}")
        values = dict(data)
        for name in ("max_joint_entries", "sample_limit_per_factor", "max_backtrack_steps"):
            if name in values:
                values[name] = int(values[name])
        return cls(**values)


@dataclass(frozen=True)
class Factor:
    """A list of state variables owning one joint distribution."""

    id: int
    joint: JointDistribution

    def __post_init__(self) -> None:
        if not self.joint.variables:
            raise ValueError("a factor needs at least one variable")

    @property
    def variables(self) -> tuple:
        return self.joint.variables

    @property
    def size(self) -> int:
        return self.joint.size


@dataclass(frozen=True)
class ComplexFluent:
    """A fluent held lazily and enforced only when sampling states."""

    fluent: Fluent
    p: float


@dataclass
class BeliefStats:
    """Belief statistics for monitoring and benchmarking."""

    representation: Representation
    n_variables: int
    n_factors: int
    mean_factor_size: float
    max_factor_size: int
    largest_table: int
    n_complex_fluents: int
    skipped_contradictions: int = 0
    n_queries: int = 0
    query_time_s: float = 0.0
