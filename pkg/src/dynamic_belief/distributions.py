"""
Tabular Joint Distributions

A JointDistribution is a dense numpy table over the Cartesian product of its
variables' domains, axis i indexed by the domain position of variables[i].
Instances are immutable: every operation returns a new distribution.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy.special import rel_entr

from .errors import (
    ContradictionError,
    DomainError,
    DuplicateVariableError,
    UnknownVariableError,
)
from .fluents import Fluent, StateVariable, Value

PROBABILITY_TOLERANCE = 1e-9
LN2 = math.log(2.0)


class JointDistribution:
    """Joint probability table over an ordered list of state variables."""

    __slots__ = ("variables", "table", "_cdf", "_axis")

    def __init__(
        self,
        variables: Sequence[StateVariable],
        table: np.ndarray,
        normalize: bool = False,
    ) -> None:
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise DuplicateVariableError(
                f"variables repeated in joint: {[str(v) for v in variables]}"
            )
        table = np.array(table, dtype=np.float64)
        expected = tuple(len(v.domain) for v in variables)
        if table.shape != expected:
            raise ValueError(f"table shape {table.shape} does not match domains {expected}")
        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise ValueError("probabilities must be finite and non-negative")
        total = float(table.sum())
        if normalize:
            if total <= 0.0:
                raise ContradictionError("cannot normalize a table with zero mass")
            table = table / total
        elif abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        table.setflags(write=False)
        self.variables = variables
        self.table = table
        self._cdf: np.ndarray | None = None
        self._axis = {v: i for i, v in enumerate(variables)}

    # -- constructors -------------------------------------------------------

    @classmethod
    def uniform(cls, variable: StateVariable) -> JointDistribution:
        n = len(variable.domain)
        return cls((variable,), np.full(n, 1.0 / n))

    @classmethod
    def point(cls, variable: StateVariable, value: Value) -> JointDistribution:
        table = np.zeros(len(variable.domain))
        table[variable.property.index_of(value)] = 1.0
        return cls((variable,), table)

    @classmethod
    def from_weights(
        cls, variable: StateVariable, weights: Mapping[Value, float]
    ) -> JointDistribution:
        """Single-variable distribution from (unnormalized) value weights."""
        table = np.zeros(len(variable.domain))
        for value, weight in weights.items():
            table[variable.property.index_of(value)] = float(weight)
        return cls((variable,), table, normalize=True)

    @classmethod
    def from_dict(
        cls,
        variables: Sequence[StateVariable],
        probabilities: Mapping[tuple[Value, ...], float],
        normalize: bool = False,
    ) -> JointDistribution:
        variables = tuple(variables)
        table = np.zeros(tuple(len(v.domain) for v in variables))
        for values, prob in probabilities.items():
            if len(values) != len(variables):
                raise ValueError(f"tuple {values} has wrong arity for {len(variables)} variables")
            index = tuple(v.property.index_of(x) for v, x in zip(variables, values))
            table[index] = float(prob)
        return cls(variables, table, normalize=normalize)

    # -- inspection ---------------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.table.size)

    def __len__(self) -> int:
        return len(self.variables)

    def __contains__(self, variable: object) -> bool:
        return variable in self._axis

    def prob(self, values: Sequence[Value]) -> float:
        index = tuple(v.property.index_of(x) for v, x in zip(self.variables, values))
        return float(self.table[index])

    def items(self, nonzero: bool = True) -> Iterator[tuple[tuple[Value, ...], float]]:
        """(value tuple, probability) pairs in lexicographic domain order."""
        domains = [v.domain for v in self.variables]
        for index in np.ndindex(self.table.shape):
            prob = float(self.table[index])
            if nonzero and prob == 0.0:
                continue
            yield tuple(domains[i][j] for i, j in enumerate(index)), prob

    def to_dict(self) -> dict[tuple[Value, ...], float]:
        return dict(self.items())

    def allclose(self, other: JointDistribution, atol: float = PROBABILITY_TOLERANCE) -> bool:
        if set(self.variables) != set(other.variables):
            return False
        return bool(np.allclose(self.table, other.reorder(self.variables).table, atol=atol, rtol=0))

    # -- structural operations ----------------------------------------------

    def reorder(self, variables: Sequence[StateVariable]) -> JointDistribution:
        variables = tuple(variables)
        if variables == self.variables:
            return self
        if set(variables) != set(self.variables) or len(variables) != len(self.variables):
            raise ValueError("reorder needs a permutation of the same variables")
        axes = [self._axis[v] for v in variables]
        return JointDistribution(variables, np.transpose(self.table, axes))

    def marginal(self, variables: Sequence[StateVariable]) -> JointDistribution:
        """Exact marginal over a subset, in the requested order."""
        variables = tuple(variables)
        for v in variables:
            if v not in self._axis:
                raise UnknownVariableError(f"{v} is not in this joint")
        keep = set(variables)
        drop = tuple(i for i, v in enumerate(self.variables) if v not in keep)
        table = self.table.sum(axis=drop) if drop else self.table
        remaining = [v for v in self.variables if v in keep]
        marginal = JointDistribution(remaining, table, normalize=True)
        return marginal.reorder(variables)

    def product(self, other: JointDistribution) -> JointDistribution:
        """Independent product; variables are self's followed by other's."""
        if set(self.variables) & set(other.variables):
            raise DuplicateVariableError("product of joints that share variables")
        return JointDistribution(
            self.variables + other.variables, np.multiply.outer(self.table, other.table)
        )

    @classmethod
    def join(cls, parts: Iterable[JointDistribution]) -> JointDistribution:
        parts = list(parts)
        joint = parts[0]
        for part in parts[1:]:
            joint = joint.product(part)
        return joint

    # -- constraint folding --------------------------------------------------

    def consistency_mask(self, fluent: Fluent) -> np.ndarray:
        """Boolean array, broadcastable to the table, true where the fluent holds."""
        mentioned = fluent.variables
        for v in mentioned:
            if v not in self._axis:
                raise UnknownVariableError(f"{v} is not in this joint")
            if self.variables[self._axis[v]].property != v.property:
                raise DomainError(f"{v} comes from a different schema than this joint")
        ordered = sorted(mentioned, key=self._axis.__getitem__)
        sub_mask = fluent_truth_table(fluent, tuple(ordered))
        shape = [1] * len(self.variables)
        for v in ordered:
            shape[self._axis[v]] = len(v.domain)
        return sub_mask.reshape(shape)

    def consistent_mass(self, fluent: Fluent) -> float:
        mask = np.broadcast_to(self.consistency_mask(fluent), self.table.shape)
        return float(self.table[mask].sum())

    def jeffrey_update(self, fluent: Fluent, p: float) -> JointDistribution:
        """Place exactly mass ``p`` on tuples consistent with ``fluent``.

        Inconsistent tuples are rescaled by (1-p)(1-m)/(pm), m being their
        prior mass, then the table is normalized. With p == 1 this filters.
        """
        if not 0.0 < p <= 1.0:
            raise ValueError(f"confidence must lie in (0, 1], got {p}")
        mask = np.broadcast_to(self.consistency_mask(fluent), self.table.shape)
        consistent = float(self.table[mask].sum())
        inconsistent = float(self.table[~mask].sum())
        if inconsistent <= 0.0:
            return self
        if consistent <= 0.0:
            raise ContradictionError(
                f"{fluent} asserted with p={p} but has no prior mass under the joint"
            )
        scale = (1.0 - p) * consistent / (p * inconsistent)
        table = np.where(mask, self.table, self.table * scale)
        return JointDistribution(self.variables, table, normalize=True)

    # -- queries ------------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> tuple[Value, ...]:
        if self._cdf is None:
            self._cdf = np.cumsum(self.table.ravel())
        u = rng.random() * self._cdf[-1]
        flat = int(np.searchsorted(self._cdf, u, side="right"))
        flat = min(flat, self.size - 1)
        index = np.unravel_index(flat, self.table.shape)
        return tuple(v.domain[int(i)] for v, i in zip(self.variables, index))

    def most_likely(self) -> tuple[Value, ...]:
        """Mode; ties broken by lexicographic order of domain indices."""
        index = np.unravel_index(int(np.argmax(self.table)), self.table.shape)
        return tuple(v.domain[int(i)] for v, i in zip(self.variables, index))

    def is_point_mass(self) -> bool:
        return bool(np.count_nonzero(self.table) == 1)

    def __repr__(self) -> str:
        names = ", ".join(str(v) for v in self.variables)
        return f"JointDistribution([{names}], size={self.size})"


def fluent_truth_table(fluent: Fluent, variables: tuple[StateVariable, ...]) -> np.ndarray:
    """Truth values of ``fluent`` over the product of ``variables``' domains."""
    # Variables compare by name only; schemas that reuse names differ in these
    schemas = (fluent.predicate.semantics, fluent.reference, tuple(v.property for v in variables))
    return _truth_table(fluent, variables, schemas)


@lru_cache(maxsize=4096)
def _truth_table(
    fluent: Fluent, variables: tuple[StateVariable, ...], _schemas: tuple[Any, ...]
) -> np.ndarray:
    position = {v: i for i, v in enumerate(variables)}
    shape = tuple(len(v.domain) for v in variables)
    truth = np.zeros(shape, dtype=bool)
    slots: list[Any] = [
        position[a] if isinstance(a, StateVariable) else None for a in fluent.args
    ]
    for index in itertools.product(*(range(n) for n in shape)):
        values = tuple(
            variables[slot].domain[index[slot]] if slot is not None else arg
            for slot, arg in zip(slots, fluent.args)
        )
        truth[index] = fluent.holds(values)
    truth.setflags(write=False)
    return truth


def kl_divergence(p: JointDistribution, q: JointDistribution) -> float:
    """D_KL(p || q) in nats; infinite when q misses support of p."""
    _check_aligned(p, q)
    return float(np.sum(rel_entr(p.table, q.table)))


def js_divergence(p: JointDistribution, q: JointDistribution) -> float:
    """Jensen-Shannon divergence in nats, bounded by [0, ln 2]."""
    _check_aligned(p, q)
    a = 0.5 * (p.table + q.table)
    value = 0.5 * float(np.sum(rel_entr(p.table, a))) + 0.5 * float(np.sum(rel_entr(q.table, a)))
    return min(max(value, 0.0), LN2)


def _check_aligned(p: JointDistribution, q: JointDistribution) -> None:
    if p.variables != q.variables:
        raise ValueError(
            "divergence needs identical variable lists: "
            f"{[str(v) for v in p.variables]} vs {[str(v) for v in q.variables]}"
        )


def validate_value(variable: StateVariable, value: Any) -> None:
    if value not in variable.property:
        raise DomainError(f"value {value!r} is outside the domain of {variable}")
