"""
FastMCP tool surface over BeliefSession.

Every tool takes a session id; each session owns its own schema and belief.
"""

import logging
import os
import sys

from fastmcp import FastMCP

from .repl import BeliefSession
from .system_utils import log_system_status
from .utils.notes_utils import render_notes
from .utils.session_utils import validate_session_id

logger = logging.getLogger(__name__)
# Ensure logs are visible in the FastMCP subprocess even if no handlers configured
if not logger.handlers:
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setLevel(logging.INFO)
    _formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
    _handler.setFormatter(_formatter)
    logger.addHandler(_handler)
logger.setLevel(os.environ.get("DYNAMIC_BELIEF_LOG_LEVEL", "INFO").upper())

SERVER_NAME = "Dynamic Belief Explorer"

mcp = FastMCP(SERVER_NAME)

# Global session manager; replaced by main() when a schema file is given
belief_session = BeliefSession()


# === TOOLS ===
@mcp.tool
def assert_fluent(assertion: str, session_id: str | None = None) -> str:
    """Fold one assertion into the session's belief.

    Args:
        assertion: Fluent text with optional confidence, e.g. "NextTo(location(B), location(C)) 0.9"
        session_id: Session ID for belief isolation (required)

    Returns:
        Confirmation with the current number of factors, or the error message
    """
    session_id = validate_session_id(session_id)
    return belief_session.execute(f"assert {assertion}", session_id)


@mcp.tool
def marginal(variables: str, session_id: str | None = None) -> str:
    """Exact marginal over state variables living in one factor.

    Args:
        variables: Space-separated variables, e.g. "color(A) color(B)"
        session_id: Session ID for belief isolation (required)
    """
    session_id = validate_session_id(session_id)
    return belief_session.execute(f"marginal {variables}", session_id)


@mcp.tool
def sample_state(session_id: str | None = None, seed: int | None = None) -> str:
    """Sample a state consistent with every stored fluent."""
    session_id = validate_session_id(session_id)
    command = "sample" if seed is None else f"sample {int(seed)}"
    return belief_session.execute(command, session_id)


@mcp.tool
def show_belief(session_id: str | None = None) -> str:
    """Factor structure and stored fluents of the session's belief."""
    session_id = validate_session_id(session_id)
    log_system_status(f"show_belief session={session_id}")
    return belief_session.execute("show", session_id)


@mcp.tool
def reset_belief(session_id: str | None = None) -> str:
    """Drop the session's belief and start again from the schema."""
    session_id = validate_session_id(session_id)
    return belief_session.execute("reset", session_id)


# === RESOURCES ===
@mcp.resource("dynamic-belief://notes/{session_id}")
def get_session_notes(session_id: str) -> str:
    """Command log of one session."""
    try:
        session_id = validate_session_id(session_id)
    except ValueError:
        return "Invalid session_id - cannot retrieve session-specific notes"
    return render_notes(belief_session.notes(session_id))


# === MAIN ENTRY POINT ===
def main(session: BeliefSession | None = None) -> None:
    """Serve the tools over stdio."""
    global belief_session
    if session is not None:
        belief_session = session
    logger.info("Starting %s", SERVER_NAME)
    mcp.run()
