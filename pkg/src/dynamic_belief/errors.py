"""
Error Types

All errors raised by the package derive from BeliefError so callers (the REPL,
the MCP tools, the benchmark harness) can catch one base class and keep going.
Each also subclasses the closest built-in so generic handlers still work.
"""

from __future__ import annotations


class BeliefError(Exception):
    """Base class for all dynamic-belief errors."""


class FluentSyntaxError(BeliefError, ValueError):
    """Malformed assertion text, annotated with the offending position."""

    def __init__(self, text: str, position: int, message: str) -> None:
        self.text = text
        self.position = position
        self.message = message
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


class UnknownPredicateError(BeliefError, ValueError):
    """Predicate name not present in the registry."""


class ArityError(BeliefError, ValueError):
    """Wrong number or kind of arguments for a predicate."""


class DomainError(BeliefError, ValueError):
    """A constant or effect value lies outside a property's domain."""


class SchemaError(BeliefError, ValueError):
    """Unknown type or property, duplicate object, or ambiguous type inference."""


class MissingVariableError(BeliefError, KeyError):
    """An assignment does not cover a variable the fluent mentions."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing variable"


class DuplicateVariableError(BeliefError, ValueError):
    """The same state variable was supplied twice."""


class ContradictionError(BeliefError, ValueError):
    """A fluent was asserted but no consistent tuple has prior mass."""


class QuerySpansFactorsError(BeliefError, ValueError):
    """A marginal query asked for variables living in different factors."""


class UnknownVariableError(BeliefError, KeyError):
    """The belief does not track the requested state variable."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown variable"


class SearchExhaustedError(BeliefError, RuntimeError):
    """Backtracking sampler ran out of steps without a consistent state."""


class DeterminizeError(BeliefError, RuntimeError):
    """No consistent hypothesis could be drawn within the retry budget."""


class NoPlanError(BeliefError, RuntimeError):
    """The planner found no plan under the hypothesized world."""


class CapacityError(BeliefError, RuntimeError):
    """Pick attempted while the robot already holds the maximum."""


class ConfigError(BeliefError, ValueError):
    """Invalid benchmark, belief or schema configuration."""
