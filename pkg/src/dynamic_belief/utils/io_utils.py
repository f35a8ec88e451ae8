from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pandas as pd

from ..errors import ConfigError


def read_json_strict(path: str | Path) -> dict[str, Any]:
    """Read a JSON object from disk, normalizing decode errors to ConfigError."""
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Error parsing {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return data


def write_json(path: str | Path, data: Any) -> Path:
    """Write canonically ordered JSON (sorted keys, trailing newline)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def write_csv(path: str | Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    return path
