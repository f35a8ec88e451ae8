"""Resource snapshots logged around benchmark runs and MCP tool calls."""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass

import psutil

logger = logging.getLogger(__name__)

MB = 1024**2


@dataclass(frozen=True)
class SystemStatus:
    ram_percent: float
    ram_used_mb: int
    ram_total_mb: int
    cpus: int | None
    process_rss_mb: int | None = None

    def describe(self, label: str) -> str:
        msg = (
            f"{label} | RAM used={self.ram_percent:.1f}% "
            f"({self.ram_used_mb}MB/{self.ram_total_mb}MB) | CPUs={self.cpus}"
        )
        if self.process_rss_mb is not None:
            msg += f" | Process RSS={self.process_rss_mb}MB"
        return msg


def system_status(include_process_rss: bool = True) -> SystemStatus:
    vm = psutil.virtual_memory()
    process_rss_mb: int | None = None
    if include_process_rss:
        try:
            process_rss_mb = psutil.Process().memory_info().rss // MB
        except Exception:
            process_rss_mb = None
    return SystemStatus(
        ram_percent=float(vm.percent),
        ram_used_mb=int(vm.used // MB),
        ram_total_mb=int(vm.total // MB),
        cpus=psutil.cpu_count(logical=True),
        process_rss_mb=process_rss_mb,
    )


def log_system_status(label: str, include_process_rss: bool = True) -> SystemStatus | None:
    """Log one resource line and mirror it to stderr; never raises."""
    try:
        status = system_status(include_process_rss)
    except Exception as exc:  # pragma: no cover
        logger.debug(f"Failed to log system status: {exc}")
        return None
    msg = status.describe(label)
    logger.info(msg)
    print(f"[dynamic-belief] {msg}", file=sys.stderr, flush=True)
    return status
