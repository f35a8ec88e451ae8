import sys
from importlib.metadata import PackageNotFoundError, version

from .base_belief import BeliefState
from .belief_types import BeliefConfig, Representation
from .dynamic_belief import DynamicBelief, belief_update, init_belief
from .fluents import Observation, Schema
from .static_belief import StaticBelief, init_static_belief


def main() -> None:
    """Main entry point for the package."""
    from . import cli

    sys.exit(cli.main())


# Package metadata helpers
try:
    __version__ = version("dynamic-belief")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0+dev"

# Public API
__all__ = [
    "main",
    "__version__",
    "BeliefConfig",
    "BeliefState",
    "DynamicBelief",
    "Observation",
    "Representation",
    "Schema",
    "StaticBelief",
    "belief_update",
    "init_belief",
    "init_static_belief",
]
