"""
Interactive Belief Sessions

BeliefSession keeps one schema, one dynamically factored belief and one seeded
random stream per session id, so several users (or MCP clients) can explore
beliefs side by side. Every command returns plain text; errors in a command
are reported and the session carries on.

Commands:
    assert <fluent> [p]     fold one assertion, e.g. assert Same(color(A), color(B)) 0.9
    marginal <var> ...      exact marginal over variables of one factor
    sample [seed]           draw a state consistent with every stored fluent
    show                    factor structure and stored fluents
    stats                   belief statistics
    reset                   drop the session's belief and start over
    notes [n]               numbered command log, optionally the last n entries
    help                    this text
"""

from __future__ import annotations

import io
import logging
import re
import sys
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np
from rich.console import Console
from rich.table import Table
from rich.text import Text

from .belief_types import BeliefConfig
from .dynamic_belief import DynamicBelief, init_belief
from .errors import BeliefError
from .fluents import Observation, Schema, render_value
from .parser import parse_assertion, parse_variable
from .utils.inspect_utils import summarize_belief
from .utils.notes_utils import append_note, render_notes
from .utils.session_utils import validate_session_id

logger = logging.getLogger(__name__)

DEMO_SCHEMA: dict[str, Any] = {
    "grid": {"rows": 3, "cols": 3, "prefix": "L"},
    "types": [
        {
            "name": "object",
            "properties": [
                {"name": "color", "domain": ["red", "green", "blue"]},
                {"name": "location", "domain": "grid"},
            ],
        }
    ],
    "objects": [],
}

HELP_TEXT = __doc__.split("Commands:", 1)[1].strip("\n") if __doc__ else ""

_VARIABLE_RE = re.compile(r"[A-Za-z_][\w\-]*\s*\(\s*[\w\-]+\s*\)")


@dataclass
class _SessionState:
    schema: Schema
    belief: DynamicBelief
    rng: np.random.Generator
    notes: list[str] = field(default_factory=list)


def render_text(renderable: Any, width: int = 100) -> str:
    """Render a rich renderable to plain text."""
    buffer = io.StringIO()
    console = Console(file=buffer, width=width, color_system=None, highlight=False)
    console.print(renderable)
    return buffer.getvalue().rstrip("\n")


class BeliefSession:
    """Session-isolated belief exploration."""

    def __init__(
        self,
        schema_data: Mapping[str, Any] | None = None,
        config: BeliefConfig | None = None,
        seed: int = 0,
    ) -> None:
        self.schema_data = dict(schema_data or DEMO_SCHEMA)
        # Fail fast on a broken schema
        Schema.from_dict(self.schema_data)
        self.config = config or BeliefConfig()
        self.seed = seed
        self._sessions: dict[str, _SessionState] = {}
        self._lock = threading.RLock()

    def _fresh_state(self, notes: list[str] | None = None) -> _SessionState:
        return _SessionState(
            schema=Schema.from_dict(self.schema_data),
            belief=init_belief((), self.config),
            rng=np.random.default_rng(self.seed),
            notes=notes if notes is not None else [],
        )

    def _get_session(self, session_id: str) -> _SessionState:
        with self._lock:
            if session_id not in self._sessions:
                self._sessions[session_id] = self._fresh_state()
            return self._sessions[session_id]

    def session_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def belief(self, session_id: str = "default") -> DynamicBelief:
        return self._get_session(validate_session_id(session_id)).belief

    def notes(self, session_id: str) -> list[str]:
        return self._get_session(validate_session_id(session_id)).notes

    # -- commands ---------------------------------------------------------------

    def assert_fluent(self, text: str, session_id: str = "default") -> str:
        state = self._get_session(validate_session_id(session_id))
        with self._lock:
            fluent, p = parse_assertion(text, state.schema)
            state.belief.update(Observation.of((fluent, p)))
            message = f"asserted {fluent} p={p:g}; {len(state.belief.factors())} factors"
        append_note(state.notes, message)
        return message

    def marginal(self, variables: str, session_id: str = "default") -> str:
        state = self._get_session(validate_session_id(session_id))
        names = _VARIABLE_RE.findall(variables)
        if not names:
            raise BeliefError("marginal needs at least one prop(obj) variable")
        with self._lock:
            resolved = [parse_variable(name, state.schema) for name in names]
            joint = state.belief.marginal(resolved)
        table = Table(title="marginal")
        for var in joint.variables:
            table.add_column(str(var))
        table.add_column("p", justify="right")
        for values, prob in joint.items(nonzero=True):
            table.add_row(*(render_value(v) for v in values), f"{prob:.6f}")
        append_note(state.notes, f"marginal {' '.join(names)}")
        return render_text(table)

    def sample(self, session_id: str = "default", seed: int | None = None) -> str:
        state = self._get_session(validate_session_id(session_id))
        with self._lock:
            rng = np.random.default_rng(seed) if seed is not None else state.rng
            assignment = state.belief.sample_state(rng)
        table = Table(title="sampled state")
        table.add_column("variable")
        table.add_column("value")
        for var in sorted(assignment, key=str):
            table.add_row(str(var), render_value(assignment[var]))
        append_note(state.notes, "sample")
        return render_text(table)

    def show(self, session_id: str = "default") -> str:
        state = self._get_session(validate_session_id(session_id))
        with self._lock:
            factors = state.belief.factors()
            stored = state.belief.complex_fluents()
        table = Table(title="factors")
        table.add_column("id", justify="right")
        table.add_column("variables")
        table.add_column("entries", justify="right")
        for factor in factors:
            table.add_row(
                str(factor.id),
                Text("[" + ", ".join(str(v) for v in factor.variables) + "]"),
                str(factor.size),
            )
        text = render_text(table)
        if stored:
            text += "\nstored fluents:\n" + "\n".join(f"  {c.fluent} p={c.p:g}" for c in stored)
        return text

    def stats(self, session_id: str = "default") -> str:
        state = self._get_session(validate_session_id(session_id))
        return summarize_belief(state.belief)

    def reset(self, session_id: str = "default") -> str:
        session_id = validate_session_id(session_id)
        with self._lock:
            notes = self._get_session(session_id).notes
            self._sessions[session_id] = self._fresh_state(notes)
        append_note(notes, "reset")
        return "belief reset"

    def execute(self, line: str, session_id: str = "default") -> str:
        """Run one command line; errors are reported, never raised."""
        line = line.strip()
        if not line:
            return ""
        command, _, rest = line.partition(" ")
        command = command.lower()
        try:
            if command == "assert":
                return self.assert_fluent(rest, session_id)
            if command == "marginal":
                return self.marginal(rest, session_id)
            if command == "sample":
                seed = int(rest) if rest.strip() else None
                return self.sample(session_id, seed)
            if command == "show":
                return self.show(session_id)
            if command == "stats":
                return self.stats(session_id)
            if command == "reset":
                return self.reset(session_id)
            if command == "notes":
                last = int(rest) if rest.strip() else None
                return render_notes(self.notes(session_id), last)
            if command == "help":
                return HELP_TEXT
            return f"error: unknown command '{command}' (try 'help')"
        except (BeliefError, ValueError) as exc:
            logger.debug("Command %r failed: %s", line, exc)
            return f"error: {exc}"


def run_repl(
    session: BeliefSession,
    input_fn: Callable[[str], str] = input,
    console: Console | None = None,
    session_id: str = "default",
) -> int:
    """Read-eval-print loop until ``quit`` or end of input."""
    console = console or Console()
    console.print("dynamic-belief REPL; type 'help' for commands, 'quit' to leave")
    while True:
        try:
            line = input_fn("belief> ")
        except (EOFError, KeyboardInterrupt):
            console.print()
            return 0
        if line.strip().lower() in ("quit", "exit"):
            return 0
        output = session.execute(line, session_id)
        if output:
            console.print(output, highlight=False, markup=False)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(run_repl(BeliefSession()))
