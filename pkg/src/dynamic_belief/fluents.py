"""
Relational Vocabulary

Object types, properties, objects, state variables, fluents and observations,
plus the predicate registry and the schema registry used by the parser.

A state variable is a property applied to an object, e.g. ``contents(L3)``.
A fluent is a predicate applied to state variables and constants, e.g.
``Same(contents(L1), contents(L2))``. Fluents are immutable and hashable;
the schema registry is the only mutable piece (objects are registered on sight
because the set of objects is not known in advance).
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Union

from .errors import (
    ArityError,
    DomainError,
    MissingVariableError,
    SchemaError,
    UnknownPredicateError,
)

Value = Union[str, int, float]
Constant = Union[Value, frozenset]
Coordinate = tuple[int, int]

_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
_NUMBER = re.compile(r"^-?\d+(\.\d+)?([eE][-+]?\d+)?$")


@dataclass(frozen=True)
class PropertySchema:
    """A named property with a finite, ordered value domain.

    ``coordinates`` optionally places domain values on a grid; the NextTo
    predicate uses it for adjacency.
    """

    name: str
    domain: tuple[Value, ...]
    coordinates: tuple[tuple[Value, Coordinate], ...] = ()
    _index: dict[Value, int] = field(
        init=False, repr=False, compare=False, hash=False, default_factory=dict
    )
    _coords: dict[Value, Coordinate] = field(
        init=False, repr=False, compare=False, hash=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("property name must be non-empty")
        domain = tuple(self.domain)
        object.__setattr__(self, "domain", domain)
        if not domain:
            raise SchemaError(f"property '{self.name}' has an empty domain")
        if len(set(domain)) != len(domain):
            raise SchemaError(f"property '{self.name}' has duplicate domain values")
        self._index.update({value: i for i, value in enumerate(domain)})
        for value, coord in self.coordinates:
            if value not in self._index:
                raise SchemaError(
                    f"coordinate given for '{value}' outside domain of '{self.name}'"
                )
            self._coords[value] = (int(coord[0]), int(coord[1]))

    def __len__(self) -> int:
        return len(self.domain)

    def __contains__(self, value: object) -> bool:
        try:
            return value in self._index
        except TypeError:
            return False

    def index_of(self, value: Value) -> int:
        try:
            return self._index[value]
        except (KeyError, TypeError):
            raise DomainError(
                f"value {value!r} is not in the domain of '{self.name}'"
            ) from None

    def coordinate(self, value: Value) -> Coordinate | None:
        return self._coords.get(value)

    def resolve_literal(self, text: str) -> Value:
        """Map literal text onto a domain value by its printed form."""
        for value in self.domain:
            if str(value) == text:
                return value
        raise DomainError(f"literal '{text}' is not in the domain of '{self.name}'")


@dataclass(frozen=True)
class ObjectType:
    name: str
    properties: tuple[PropertySchema, ...]
    prefix: str | None = None

    def __post_init__(self) -> None:
        names = [p.name for p in self.properties]
        if len(set(names)) != len(names):
            raise SchemaError(f"type '{self.name}' declares a property twice")

    def declares(self, prop_name: str) -> bool:
        return any(p.name == prop_name for p in self.properties)

    def property(self, prop_name: str) -> PropertySchema:
        for prop in self.properties:
            if prop.name == prop_name:
                return prop
        raise SchemaError(f"type '{self.name}' has no property '{prop_name}'")


@dataclass(frozen=True)
class ObjectRef:
    name: str
    type: ObjectType = field(compare=False, repr=False)

    def __str__(self) -> str:
        return self.name


class StateVariable:
    """A property applied to an object. Equality is by (property, object) name."""

    __slots__ = ("property", "obj", "_key", "_hash")

    def __init__(self, property: PropertySchema, obj: ObjectRef) -> None:
        if not obj.type.declares(property.name):
            raise SchemaError(
                f"object '{obj.name}' of type '{obj.type.name}' "
                f"has no property '{property.name}'"
            )
        self.property = property
        self.obj = obj
        self._key = (property.name, obj.name)
        self._hash = hash(self._key)

    @property
    def domain(self) -> tuple[Value, ...]:
        return self.property.domain

    @property
    def key(self) -> tuple[str, str]:
        return self._key

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVariable):
            return NotImplemented
        return self._key == other._key

    def __lt__(self, other: StateVariable) -> bool:
        return self._key < other._key

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return f"{self.property.name}({self.obj.name})"

    def __repr__(self) -> str:
        return f"StateVariable({self})"


Term = Union[StateVariable, Value, frozenset]

# Argument kinds accepted by predicates
TERM = "term"  # state variable or scalar constant
VAR = "var"  # state variable only
SET = "set"  # set of constants


@dataclass(frozen=True)
class PredicateSpec:
    """Name, arity and semantics of one predicate.

    ``semantics(values, reference)`` receives the argument values in order and
    the property of the first variable argument (for domain-aware predicates).
    """

    name: str
    arg_kinds: tuple[str, ...]
    semantics: Callable[[tuple[Any, ...], PropertySchema], bool] = field(
        compare=False, repr=False
    )

    @property
    def arity(self) -> int:
        return len(self.arg_kinds)


def _equal(values: tuple[Any, ...], _ref: PropertySchema) -> bool:
    return bool(values[0] == values[1])


def _different(values: tuple[Any, ...], _ref: PropertySchema) -> bool:
    return bool(values[0] != values[1])


def _next_to(values: tuple[Any, ...], ref: PropertySchema) -> bool:
    a = ref.coordinate(values[0])
    b = ref.coordinate(values[1])
    if a is None or b is None:
        return False
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def _in(values: tuple[Any, ...], _ref: PropertySchema) -> bool:
    return values[0] in values[1]


class PredicateRegistry:
    """Extensible name -> PredicateSpec mapping."""

    def __init__(self, specs: Iterable[PredicateSpec] = ()) -> None:
        self._specs: dict[str, PredicateSpec] = {}
        for spec in specs:
            self.register(spec)

    def register(self, spec: PredicateSpec) -> None:
        self._specs[spec.name] = spec

    def get(self, name: str) -> PredicateSpec:
        try:
            return self._specs[name]
        except KeyError:
            raise UnknownPredicateError(f"unknown predicate '{name}'") from None

    def __contains__(self, name: object) -> bool:
        return name in self._specs

    def names(self) -> list[str]:
        return sorted(self._specs)

    def copy(self) -> PredicateRegistry:
        return PredicateRegistry(self._specs.values())


EQUAL = PredicateSpec("Equal", (TERM, TERM), _equal)
DIFFERENT = PredicateSpec("Different", (TERM, TERM), _different)
SAME = PredicateSpec("Same", (VAR, VAR), _equal)
NEXT_TO = PredicateSpec("NextTo", (TERM, TERM), _next_to)
IN = PredicateSpec("In", (VAR, SET), _in)

DEFAULT_PREDICATES = PredicateRegistry([EQUAL, DIFFERENT, SAME, NEXT_TO, IN])


class Fluent:
    """A predicate applied to state variables and constants."""

    __slots__ = ("predicate", "args", "_variables", "_reference", "_hash")

    def __init__(self, predicate: PredicateSpec, args: Iterable[Term]) -> None:
        args = tuple(args)
        if len(args) != predicate.arity:
            raise ArityError(
                f"{predicate.name} takes {predicate.arity} arguments, got {len(args)}"
            )
        variables: list[StateVariable] = []
        for arg in args:
            if isinstance(arg, StateVariable) and arg not in variables:
                variables.append(arg)
        if not variables:
            raise ArityError(f"{predicate.name} needs at least one state variable")
        reference = next(a for a in args if isinstance(a, StateVariable)).property

        for kind, arg in zip(predicate.arg_kinds, args):
            if kind == VAR and not isinstance(arg, StateVariable):
                raise ArityError(f"{predicate.name} expects a state variable, got {arg!r}")
            if kind == SET:
                if not isinstance(arg, frozenset) or not arg:
                    raise ArityError(f"{predicate.name} expects a non-empty value set")
                for value in arg:
                    reference.index_of(value)
            if kind == TERM:
                if isinstance(arg, frozenset):
                    raise ArityError(f"{predicate.name} does not accept a value set")
                if not isinstance(arg, StateVariable):
                    reference.index_of(arg)

        self.predicate = predicate
        self.args = args
        self._variables = tuple(variables)
        self._reference = reference
        self._hash = hash((predicate.name, args))

    @property
    def variables(self) -> tuple[StateVariable, ...]:
        return self._variables

    @property
    def reference(self) -> PropertySchema:
        return self._reference

    def holds(self, values: tuple[Any, ...]) -> bool:
        """Evaluate on argument values given in argument order."""
        return self.predicate.semantics(values, self._reference)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fluent):
            return NotImplemented
        return self.predicate.name == other.predicate.name and self.args == other.args

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Fluent({render(self)})"


def mentioned_variables(fluent: Fluent) -> tuple[StateVariable, ...]:
    """Distinct state variables of the fluent, in first-occurrence order."""
    return fluent.variables


def evaluate(fluent: Fluent, assignment: Mapping[StateVariable, Any]) -> bool:
    values = []
    for arg in fluent.args:
        if isinstance(arg, StateVariable):
            try:
                values.append(assignment[arg])
            except KeyError:
                raise MissingVariableError(
                    f"assignment has no value for {arg} needed by {render(fluent)}"
                ) from None
        else:
            values.append(arg)
    return fluent.holds(tuple(values))


def render_value(value: Any) -> str:
    if isinstance(value, bool):
        return f'"{value}"'
    if isinstance(value, (int, float)):
        return repr(value)
    text = str(value)
    if _IDENTIFIER.match(text) and not _NUMBER.match(text):
        return text
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def render_term(term: Term, reference: PropertySchema | None = None) -> str:
    if isinstance(term, StateVariable):
        return str(term)
    if isinstance(term, frozenset):
        if reference is not None:
            members = sorted(term, key=reference.index_of)
        else:
            members = sorted(term, key=str)
        return "{" + ", ".join(render_value(v) for v in members) + "}"
    return render_value(term)


def render(fluent: Fluent) -> str:
    """Print a fluent in the textual grammar accepted by the parser."""
    body = ", ".join(render_term(arg, fluent.reference) for arg in fluent.args)
    return f"{fluent.predicate.name}({body})"


@dataclass(frozen=True)
class Observation:
    """A set of (fluent, confidence) pairs, confidence in (0, 1]."""

    entries: tuple[tuple[Fluent, float], ...] = ()

    def __post_init__(self) -> None:
        seen: dict[tuple[Fluent, float], None] = {}
        for fluent, p in self.entries:
            if not isinstance(fluent, Fluent):
                raise TypeError(f"observation entry is not a Fluent: {fluent!r}")
            p = float(p)
            if not 0.0 < p <= 1.0:
                raise ValueError(f"confidence must lie in (0, 1], got {p}")
            seen.setdefault((fluent, p), None)
        object.__setattr__(self, "entries", tuple(seen))

    @classmethod
    def of(cls, *pairs: tuple[Fluent, float]) -> Observation:
        return cls(tuple(pairs))

    def merged(self, other: Observation) -> Observation:
        return Observation(self.entries + other.entries)

    def __iter__(self) -> Iterator[tuple[Fluent, float]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def grid_domain(
    rows: int, cols: int, prefix: str = "L", extra: Iterable[Value] = ()
) -> tuple[tuple[Value, ...], tuple[tuple[Value, Coordinate], ...]]:
    """Row-major grid location names (``L0`` .. ``L{rows*cols-1}``) plus extras."""
    if rows <= 0 or cols <= 0:
        raise SchemaError("grid dimensions must be positive")
    names = [f"{prefix}{r * cols + c}" for r in range(rows) for c in range(cols)]
    coords = tuple(
        (f"{prefix}{r * cols + c}", (r, c)) for r in range(rows) for c in range(cols)
    )
    return tuple(names) + tuple(extra), coords


class Schema:
    """Registry of types, objects and predicates used to resolve assertions.

    Unknown objects named in an assertion are registered on sight, with their
    type inferred from the property applied to them (and the type's name
    prefix when several types declare that property).
    """

    def __init__(
        self,
        types: Iterable[ObjectType] = (),
        predicates: PredicateRegistry | None = None,
    ) -> None:
        self.types: dict[str, ObjectType] = {}
        self.objects: dict[str, ObjectRef] = {}
        self.predicates = predicates or DEFAULT_PREDICATES.copy()
        # Re-entrant: registration may happen while resolving a variable
        self._lock = threading.RLock()
        for object_type in types:
            self.add_type(object_type)

    def add_type(self, object_type: ObjectType) -> None:
        with self._lock:
            if object_type.name in self.types:
                raise SchemaError(f"type '{object_type.name}' declared twice")
            self.types[object_type.name] = object_type

    def add_object(self, name: str, type_name: str) -> ObjectRef:
        with self._lock:
            if type_name not in self.types:
                raise SchemaError(f"unknown type '{type_name}'")
            existing = self.objects.get(name)
            if existing is not None:
                if existing.type.name != type_name:
                    raise SchemaError(
                        f"object '{name}' already registered as '{existing.type.name}'"
                    )
                return existing
            ref = ObjectRef(name, self.types[type_name])
            self.objects[name] = ref
            return ref

    def infer_type(self, obj_name: str, prop_name: str) -> ObjectType:
        candidates = [t for t in self.types.values() if t.declares(prop_name)]
        if not candidates:
            raise SchemaError(f"no type declares property '{prop_name}'")
        if len(candidates) == 1:
            return candidates[0]
        by_prefix = [
            t for t in candidates if t.prefix and obj_name.startswith(t.prefix)
        ]
        if len(by_prefix) == 1:
            return by_prefix[0]
        # Longest matching prefix wins when prefixes nest
        if by_prefix:
            by_prefix.sort(key=lambda t: len(t.prefix or ""), reverse=True)
            if len(by_prefix[0].prefix or "") > len(by_prefix[1].prefix or ""):
                return by_prefix[0]
        raise SchemaError(
            f"cannot infer the type of '{obj_name}': "
            f"{sorted(t.name for t in candidates)} all declare '{prop_name}'"
        )

    def variable(self, prop_name: str, obj_name: str, register: bool = True) -> StateVariable:
        with self._lock:
            ref = self.objects.get(obj_name)
            if ref is None:
                if not register:
                    raise SchemaError(f"unknown object '{obj_name}'")
                ref = self.add_object(obj_name, self.infer_type(obj_name, prop_name).name)
            return StateVariable(ref.type.property(prop_name), ref)

    def fluent(self, predicate: str, *args: Term) -> Fluent:
        return Fluent(self.predicates.get(predicate), args)

    def has_object(self, name: str) -> bool:
        return name in self.objects

    def property_names(self) -> set[str]:
        return {p.name for t in self.types.values() for p in t.properties}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Schema:
        """Build a schema from its JSON form.

        ``{"grid": {"rows": 3, "cols": 3, "prefix": "L"},
           "types": [{"name": "object", "prefix": "obj",
                      "properties": [{"name": "color", "domain": ["red", "blue"]},
                                     {"name": "location", "domain": "grid",
                                      "extra": ["held"]}]}],
           "objects": [{"name": "A", "type": "object"}]}``
        """
        grid = data.get("grid")
        types: list[ObjectType] = []
        for type_data in data.get("types", []):
            props: list[PropertySchema] = []
            for prop_data in type_data.get("properties", []):
                domain = prop_data.get("domain")
                if domain == "grid":
                    if not grid:
                        raise SchemaError(
                            f"property '{prop_data.get('name')}' uses a grid domain "
                            "but the schema declares no grid"
                        )
                    values, coords = grid_domain(
                        int(grid["rows"]),
                        int(grid["cols"]),
                        grid.get("prefix", "L"),
                        prop_data.get("extra", ()),
                    )
                    props.append(PropertySchema(prop_data["name"], values, coords))
                elif isinstance(domain, list):
                    props.append(PropertySchema(prop_data["name"], tuple(domain)))
                else:
                    raise SchemaError(
                        f"property '{prop_data.get('name')}' needs a list or 'grid' domain"
                    )
            types.append(
                ObjectType(type_data["name"], tuple(props), type_data.get("prefix"))
            )
        schema = cls(types)
        for obj in data.get("objects", []):
            schema.add_object(obj["name"], obj["type"])
        return schema
