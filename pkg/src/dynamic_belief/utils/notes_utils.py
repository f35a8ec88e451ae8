from __future__ import annotations

MAX_NOTES = 1000


def append_note(notes: list[str], message: str, limit: int = MAX_NOTES) -> None:
    """Log one REPL/tool command for a session.

    Multi-line replies (rendered tables) keep only their first line; the log
    holds the newest ``limit`` entries.
    """
    first_line = message.strip().splitlines()[0] if message.strip() else ""
    notes.append(first_line)
    if len(notes) > limit:
        del notes[: len(notes) - limit]


def render_notes(notes: list[str], last: int | None = None) -> str:
    """Numbered command log, optionally only the ``last`` entries."""
    if not notes:
        return "No notes yet for this session"
    start = 0 if last is None else max(0, len(notes) - last)
    return "\n".join(f"{i + 1:>4}  {note}" for i, note in enumerate(notes[start:], start))
