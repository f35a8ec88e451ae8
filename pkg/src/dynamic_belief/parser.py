"""
Assertion Parser

Recursive-descent parser for the textual fluent grammar::

    fluent   := NAME "(" term ("," term)* ")"
    term     := NAME "(" NAME ")"              state variable, prop(obj)
              | "{" literal ("," literal)* "}"  value set
              | literal
    literal  := NAME | NUMBER | STRING

Whitespace is insignificant and identifiers are case-sensitive. Literals are
resolved against the domain of the fluent's first state variable. Objects not
yet in the schema are registered once the whole fluent has been validated.
The parser keeps no state between calls, so it is safe to call concurrently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from .errors import FluentSyntaxError, SchemaError, UnknownPredicateError
from .fluents import Fluent, ObjectRef, Schema, StateVariable

_TOKEN_SPEC = [
    ("STRING", r'"(?:[^"\\]|\\.)*"'),
    ("NUMBER", r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?(?![A-Za-z_])"),
    ("NAME", r"[A-Za-z_][A-Za-z0-9_\-]*"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("LBRACE", r"\{"),
    ("RBRACE", r"\}"),
    ("COMMA", r","),
    ("SKIP", r"\s+"),
    ("MISMATCH", r"."),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPEC))


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    position: int


@dataclass(frozen=True)
class _VarNode:
    prop: str
    obj: str
    position: int


@dataclass(frozen=True)
class _LiteralNode:
    text: str
    position: int


@dataclass(frozen=True)
class _SetNode:
    members: tuple[_LiteralNode, ...]
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup or "MISMATCH"
        if kind == "SKIP":
            continue
        if kind == "MISMATCH":
            raise FluentSyntaxError(
                text, match.start(), f"unexpected character {match.group()!r}"
            )
        value = match.group()
        if kind == "STRING":
            value = re.sub(r"\\(.)", r"\1", value[1:-1])
        tokens.append(_Token(kind, value, match.start()))
    tokens.append(_Token("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos = min(self.pos + 1, len(self.tokens) - 1)
        return token

    def expect(self, kind: str, what: str) -> _Token:
        token = self.peek()
        if token.kind != kind:
            found = token.text or "end of input"
            raise FluentSyntaxError(self.text, token.position, f"expected {what}, found {found!r}")
        return self.advance()

    def fluent(self) -> tuple[_Token, list[Any]]:
        name = self.expect("NAME", "predicate name")
        self.expect("LPAREN", "'('")
        args = [self.term()]
        while self.peek().kind == "COMMA":
            self.advance()
            args.append(self.term())
        self.expect("RPAREN", "')' or ','")
        self.expect("EOF", "end of input")
        return name, args

    def variable_only(self) -> _VarNode:
        node = self.term()
        if not isinstance(node, _VarNode):
            raise FluentSyntaxError(self.text, node.position, "expected prop(obj)")
        self.expect("EOF", "end of input")
        return node

    def term(self) -> Any:
        token = self.peek()
        if token.kind == "NAME" and self.peek(1).kind == "LPAREN":
            self.advance()
            self.advance()
            obj = self.peek()
            if obj.kind not in ("NAME", "NUMBER"):
                raise FluentSyntaxError(
                    self.text, obj.position, f"expected object name, found {obj.text!r}"
                )
            self.advance()
            self.expect("RPAREN", "')'")
            return _VarNode(token.text, obj.text, token.position)
        if token.kind == "LBRACE":
            self.advance()
            members = [self.literal()]
            while self.peek().kind == "COMMA":
                self.advance()
                members.append(self.literal())
            self.expect("RBRACE", "'}' or ','")
            return _SetNode(tuple(members), token.position)
        return self.literal()

    def literal(self) -> _LiteralNode:
        token = self.peek()
        if token.kind not in ("NAME", "NUMBER", "STRING"):
            found = token.text or "end of input"
            raise FluentSyntaxError(self.text, token.position, f"expected a term, found {found!r}")
        self.advance()
        return _LiteralNode(token.text, token.position)


def _resolve_variable(
    node: _VarNode, schema: Schema, pending: dict[str, ObjectRef]
) -> StateVariable:
    ref = schema.objects.get(node.obj) or pending.get(node.obj)
    if ref is None:
        ref = ObjectRef(node.obj, schema.infer_type(node.obj, node.prop))
        pending[node.obj] = ref
    try:
        return StateVariable(ref.type.property(node.prop), ref)
    except SchemaError as exc:
        raise SchemaError(f"{exc} (at position {node.position})") from None


def parse_fluent(text: str, schema: Schema) -> Fluent:
    """Parse ``Pred(term, ...)`` into a validated Fluent.

    Raises FluentSyntaxError, UnknownPredicateError, ArityError, DomainError or
    SchemaError. Unknown objects are registered only when parsing succeeds.
    """
    parser = _Parser(text)
    name, raw_args = parser.fluent()
    if name.text not in schema.predicates:
        raise UnknownPredicateError(
            f"unknown predicate '{name.text}' at position {name.position}"
        )
    predicate = schema.predicates.get(name.text)

    with schema._lock:
        pending: dict[str, ObjectRef] = {}
        resolved: list[Any] = [
            _resolve_variable(arg, schema, pending) if isinstance(arg, _VarNode) else arg
            for arg in raw_args
        ]
        reference = next((a.property for a in resolved if isinstance(a, StateVariable)), None)
        args: list[Any] = []
        for arg in resolved:
            if isinstance(arg, _LiteralNode):
                if reference is None:
                    args.append(arg.text)
                else:
                    args.append(reference.resolve_literal(arg.text))
            elif isinstance(arg, _SetNode):
                if reference is None:
                    args.append(frozenset(m.text for m in arg.members))
                else:
                    args.append(frozenset(reference.resolve_literal(m.text) for m in arg.members))
            else:
                args.append(arg)
        fluent = Fluent(predicate, args)
        for obj_name, ref in pending.items():
            schema.add_object(obj_name, ref.type.name)
    return fluent


def parse_variable(text: str, schema: Schema) -> StateVariable:
    """Parse a single ``prop(obj)`` term, registering an unknown object."""
    node = _Parser(text).variable_only()
    return schema.variable(node.prop, node.obj)


def parse_assertion(text: str, schema: Schema, default_p: float = 1.0) -> tuple[Fluent, float]:
    """Parse ``Pred(...) [p]``: a fluent optionally followed by its confidence."""
    stripped = text.strip()
    close = stripped.rfind(")")
    tail = stripped[close + 1 :].strip() if close >= 0 else ""
    p = default_p
    if tail:
        try:
            p = float(tail)
        except ValueError:
            raise FluentSyntaxError(stripped, close + 1, f"invalid confidence {tail!r}") from None
        stripped = stripped[: close + 1]
    if not 0.0 < p <= 1.0:
        raise FluentSyntaxError(text, len(text), f"confidence must lie in (0, 1], got {p}")
    return parse_fluent(stripped, schema), p
