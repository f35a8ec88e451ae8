from __future__ import annotations

import re

from ..errors import ConfigError

# Session ids end up in resource URIs (dynamic-belief://notes/{session_id})
SESSION_ID_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.:-]{0,63}")


def validate_session_id(session_id: str | None) -> str:
    """Strip and check a session id; raises ConfigError (a ValueError)."""
    if not isinstance(session_id, str) or not session_id.strip():
        raise ConfigError("session_id is required for session isolation")
    cleaned = session_id.strip()
    if not SESSION_ID_RE.fullmatch(cleaned):
        raise ConfigError(
            f"invalid session_id {cleaned!r}: use up to 64 letters, digits, '_', '.', ':' or '-'"
        )
    return cleaned
