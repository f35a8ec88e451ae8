"""
Benchmark Harness

Runs seeded cooking episodes for one representation and reports solve rate,
belief-update time and query throughput, or sweeps the assertion confidence p
and the split threshold epsilon and reports the resulting cost and factor-size
trends.

Each episode owns its world, belief and random streams: the world and its
assertion stream draw from ``default_rng([seed, 0])`` and the agent's state
sampler from ``default_rng([seed, 1])``. Episodes are therefore independent and
can run in worker processes or be served from the on-disk episode cache.

Queries per second counts the consistent-state sampling calls issued by the
planner; timers exclude simulator stepping.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import diskcache
import numpy as np
import pandas as pd
from scipy import stats as scipy_stats

from .belief_types import BeliefConfig, Representation
from .cooking import TEMPLATES, CookingEnv, WorldConfig, initial_belief
from .errors import ConfigError
from .planner import DEFAULT_STEP_CAP, EpisodeResult, execute_episode
from .system_utils import log_system_status
from .utils.io_utils import read_json_strict, write_csv, write_json

logger = logging.getLogger(__name__)

CACHE_DIR_ENV = "DYNAMIC_BELIEF_CACHE_DIR"
DEFAULT_CACHE_DIR = Path.home() / ".cache" / "dynamic-belief"
OUTPUT_FORMATS = ("csv", "json", "both")
SOLVE_TIME_THRESHOLDS_S = (1, 5, 10, 30, 60)
QUERY_NOTE = (
    "queries_per_second counts consistent-state sampling calls issued by the planner "
    "(mean across solved episodes); timers exclude simulator stepping"
)

# Fields that change what an episode computes; the rest only affect reporting
_EPISODE_FIELDS = (
    "grid_rows",
    "grid_cols",
    "n_vegetables",
    "n_seasonings",
    "representation",
    "timeout_s",
    "p",
    "epsilon",
    "step_cap",
    "templates",
    "max_joint_entries",
    "sample_limit_per_factor",
    "max_backtrack_steps",
)


@dataclass
class BenchmarkConfig:
    """Benchmark settings, loadable from JSON and overridable from the CLI."""

    grid_rows: int = 4
    grid_cols: int = 4
    n_vegetables: int = 3
    n_seasonings: int = 3
    representation: str = "dynamic"
    episodes: int = 100
    timeout_s: float = 60.0
    p: float = 1.0
    epsilon: float = 1e-9
    seed: int = 0
    seeds: list[int] | None = None
    output: str | None = None
    output_format: str = "csv"
    step_cap: int = DEFAULT_STEP_CAP
    templates: tuple[str, ...] = TEMPLATES
    max_joint_entries: int = 10**6
    sample_limit_per_factor: int = 100
    max_backtrack_steps: int = 10**5
    include_timings: bool = True
    workers: int = 1
    cache_dir: str | None = None

    def validate(self) -> BenchmarkConfig:
        self.representation = Representation.parse(self.representation).value
        self.templates = tuple(self.templates)
        if self.episodes < 1:
            raise ConfigError("episodes must be at least 1")
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be positive")
        if self.step_cap < 1:
            raise ConfigError("step_cap must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {OUTPUT_FORMATS}")
        if self.seeds is not None and not self.seeds:
            raise ConfigError("seeds must not be empty when given")
        # Both raise ConfigError on bad values
        self.world_config(self.seed)
        self.belief_config()
        return self

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BenchmarkConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown benchmark config fields: {sorted(unknown)}")
        return cls(**dict(data)).validate()

    @classmethod
    def from_file(cls, path: str | Path) -> BenchmarkConfig:
        return cls.from_dict(read_json_strict(path))

    def with_overrides(self, **overrides: Any) -> BenchmarkConfig:
        """Copy with every non-None override applied, then validated."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes).validate()

    def seed_list(self) -> list[int]:
        if self.seeds is not None:
            return [int(s) for s in self.seeds]
        return [self.seed + i for i in range(self.episodes)]

    def world_config(self, seed: int) -> WorldConfig:
        return WorldConfig(
            grid_rows=self.grid_rows,
            grid_cols=self.grid_cols,
            n_vegetables=self.n_vegetables,
            n_seasonings=self.n_seasonings,
            assertion_p=self.p,
            seed=seed,
            templates=tuple(self.templates),
        )

    def belief_config(self) -> BeliefConfig:
        return BeliefConfig(
            epsilon=self.epsilon,
            max_joint_entries=self.max_joint_entries,
            sample_limit_per_factor=self.sample_limit_per_factor,
            max_backtrack_steps=self.max_backtrack_steps,
        )

    def episode_key(self, seed: int) -> str:
        payload = {name: getattr(self, name) for name in _EPISODE_FIELDS}
        payload["templates"] = list(self.templates)
        payload["seed"] = seed
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
        return f"episode:{digest}"

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["templates"] = list(self.templates)
        return data


def run_episode(config: BenchmarkConfig, seed: int) -> EpisodeResult:
    """One independent seeded episode."""
    env = CookingEnv(config.world_config(seed), np.random.default_rng([seed, 0]))
    belief = initial_belief(env.config, config.representation, config.belief_config())
    return execute_episode(
        env,
        belief,
        np.random.default_rng([seed, 1]),
        timeout_s=config.timeout_s,
        step_cap=config.step_cap,
        seed=seed,
    )


class EpisodeCache:
    """On-disk cache of finished episode results, keyed by episode settings and seed."""

    def __init__(self, cache_dir: str | Path) -> None:
        self._cache_dir = Path(cache_dir)
        self._cache_dir.mkdir(parents=True, exist_ok=True)
        self._cache = diskcache.Cache(
            directory=str(self._cache_dir),
            eviction_policy="least-recently-used",
        )

    def get(self, config: BenchmarkConfig, seed: int) -> EpisodeResult | None:
        data = self._cache.get(config.episode_key(seed))
        if data is None:
            return None
        return EpisodeResult(**data)

    def set(self, config: BenchmarkConfig, seed: int, result: EpisodeResult) -> None:
        self._cache.set(config.episode_key(seed), asdict(result))

    def __len__(self) -> int:
        return len(self._cache)

    def close(self) -> None:
        self._cache.close()

    def __enter__(self) -> EpisodeCache:
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def resolve_cache_dir(cache_dir: str | None, use_default: bool = False) -> str | None:
    if cache_dir:
        return cache_dir
    if use_default:
        return os.environ.get(CACHE_DIR_ENV, str(DEFAULT_CACHE_DIR))
    return None


def run_episodes(config: BenchmarkConfig) -> list[EpisodeResult]:
    """Episode results in seed order, from the cache where possible."""
    seeds = config.seed_list()
    results: dict[int, EpisodeResult] = {}
    cache = EpisodeCache(config.cache_dir) if config.cache_dir else None
    try:
        if cache is not None:
            for seed in seeds:
                hit = cache.get(config, seed)
                if hit is not None:
                    results[seed] = hit
            if results:
                logger.info("Reusing %d cached episodes from %s", len(results), config.cache_dir)
        pending = [s for s in dict.fromkeys(seeds) if s not in results]
        if config.workers > 1 and len(pending) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                fresh = list(pool.map(run_episode, [config] * len(pending), pending))
        else:
            fresh = [run_episode(config, seed) for seed in pending]
        for seed, result in zip(pending, fresh):
            results[seed] = result
            if cache is not None:
                cache.set(config, seed, result)
    finally:
        if cache is not None:
            cache.close()
    return [results[seed] for seed in seeds]


def summarize(results: Sequence[EpisodeResult], include_timings: bool = True) -> dict[str, Any]:
    """Aggregate per-episode rows; recomputable from the rows alone."""
    n = len(results)
    solved = [r for r in results if r.solved]
    summary: dict[str, Any] = {
        "episodes": n,
        "solved": len(solved),
        "percent_solved": 100.0 * len(solved) / n if n else 0.0,
        "mean_total_cost_solved": _mean(r.total_cost for r in solved),
        "mean_total_cost": _mean(r.total_cost for r in results),
        "mean_steps": _mean(r.steps for r in results),
        "n_factors_mean": _mean(r.n_factors_mean for r in results),
        "mean_factor_size": _mean(r.mean_factor_size for r in results),
        "max_factor_size": max((r.max_factor_size for r in results), default=0),
        "mean_n_queries": _mean(r.n_queries for r in results),
    }
    if include_timings:
        summary["belief_update_time_mean_s"] = _mean(r.belief_update_time_mean_s for r in results)
        summary["queries_per_second_solved"] = _mean(r.queries_per_second for r in solved)
        summary["wall_time_mean_s"] = _mean(r.wall_time_s for r in results)
        summary["solve_time_cdf"] = {
            f"{t}s": (sum(1 for r in solved if r.wall_time_s <= t) / n if n else 0.0)
            for t in SOLVE_TIME_THRESHOLDS_S
        }
    return summary


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return float(np.mean(values)) if values else 0.0


@dataclass
class BenchmarkReport:
    config: dict[str, Any]
    summary: dict[str, Any]
    episodes: pd.DataFrame
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "summary": self.summary,
            "notes": QUERY_NOTE,
            "episodes": self.episodes.to_dict(orient="records"),
        }


def episodes_frame(results: Sequence[EpisodeResult], include_timings: bool) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict(include_timings) for r in results])


def _config_echo(config: BenchmarkConfig) -> dict[str, Any]:
    echo = config.to_dict()
    # Reporting-only settings do not belong in a reproducible report
    for name in ("output", "workers", "cache_dir"):
        echo.pop(name, None)
    return echo


def _output_paths(output: str, output_format: str) -> dict[str, Path]:
    base = Path(output)
    stem = base.with_suffix("") if base.suffix in (".csv", ".json") else base
    paths: dict[str, Path] = {}
    if output_format in ("csv", "both"):
        paths["csv"] = stem.with_suffix(".csv")
    if output_format in ("json", "both"):
        paths["json"] = stem.with_suffix(".json")
    return paths


def run_benchmark(config: BenchmarkConfig) -> BenchmarkReport:
    """Run every seeded episode and aggregate; writes CSV/JSON when ``output`` is set."""
    config.validate()
    logger.info(
        "Benchmark start: %s %dx%d, %d+%d ingredients, %d episodes, p=%s, epsilon=%s",
        config.representation,
        config.grid_rows,
        config.grid_cols,
        config.n_vegetables,
        config.n_seasonings,
        len(config.seed_list()),
        config.p,
        config.epsilon,
    )
    log_system_status("benchmark start")
    results = run_episodes(config)
    status = log_system_status("benchmark end")
    report = BenchmarkReport(
        config=_config_echo(config),
        summary=summarize(results, config.include_timings),
        episodes=episodes_frame(results, config.include_timings),
    )
    if config.include_timings and status is not None and status.process_rss_mb is not None:
        report.summary["process_rss_mb"] = status.process_rss_mb
    if config.output:
        paths = _output_paths(config.output, config.output_format)
        if "csv" in paths:
            report.outputs.append(str(write_csv(paths["csv"], report.episodes)))
        if "json" in paths:
            report.outputs.append(str(write_json(paths["json"], report.to_dict())))
        logger.info("Wrote %s", ", ".join(report.outputs))
    logger.info(
        "Benchmark finished: %d/%d solved", report.summary["solved"], report.summary["episodes"]
    )
    return report


# -- sweeps -----------------------------------------------------------------


@dataclass
class SweepReport:
    config: dict[str, Any]
    cells: pd.DataFrame
    episodes: pd.DataFrame
    summaries: dict[tuple[float, float], dict[str, Any]]
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "notes": QUERY_NOTE,
            "cells": self.cells.to_dict(orient="records"),
            "episodes": self.episodes.to_dict(orient="records"),
        }


SWEEP_METRICS = ("mean_total_cost", "mean_factor_size", "n_factors_mean", "percent_solved")


def sweep(
    config: BenchmarkConfig,
    p_values: Sequence[float],
    epsilon_values: Sequence[float],
) -> SweepReport:
    """Paired-seed grid over (p, epsilon); emits long-format cell metrics."""
    config.validate()
    if not p_values or not epsilon_values:
        raise ConfigError("sweep needs at least one value per axis")
    cell_rows: list[dict[str, Any]] = []
    frames: list[pd.DataFrame] = []
    summaries: dict[tuple[float, float], dict[str, Any]] = {}
    for p in p_values:
        for epsilon in epsilon_values:
            cell = replace(config, p=float(p), epsilon=float(epsilon), output=None).validate()
            logger.info("Sweep cell p=%s epsilon=%s", p, epsilon)
            results = run_episodes(cell)
            summary = summarize(results, config.include_timings)
            summaries[(float(p), float(epsilon))] = summary
            for metric in SWEEP_METRICS:
                cell_rows.append(
                    {"p": float(p), "epsilon": float(epsilon), "metric": metric, "value": summary[metric]}
                )
            frame = episodes_frame(results, config.include_timings)
            frame.insert(0, "epsilon", float(epsilon))
            frame.insert(0, "p", float(p))
            frames.append(frame)
    report = SweepReport(
        config=_config_echo(config),
        cells=pd.DataFrame(cell_rows, columns=["p", "epsilon", "metric", "value"]),
        episodes=pd.concat(frames, ignore_index=True),
        summaries=summaries,
    )
    if config.output:
        paths = _output_paths(config.output, config.output_format)
        if "csv" in paths:
            report.outputs.append(str(write_csv(paths["csv"], report.cells)))
        if "json" in paths:
            report.outputs.append(str(write_json(paths["json"], report.to_dict())))
        logger.info("Wrote %s", ", ".join(report.outputs))
    return report


@dataclass(frozen=True)
class TrendResult:
    axis: str
    metric: str
    from_value: float
    to_value: float
    mean_difference: float
    statistic: float
    p_value: float
    consistent: bool


def trend_test(
    episodes: pd.DataFrame,
    axis: str,
    values: Sequence[float],
    metric: str,
    direction: str = "non-decreasing",
    alpha: float = 0.05,
) -> list[TrendResult]:
    """Paired one-sided test of a monotone trend along ``axis``.

    For each consecutive pair of axis values, episodes are paired by seed
    (within equal values of the other axis) and a paired t-test looks for a
    significant step against ``direction``. A step is consistent with the
    trend unless that test rejects at level ``alpha``.
    """
    if direction not in ("non-decreasing", "non-increasing"):
        raise ConfigError("direction must be 'non-decreasing' or 'non-increasing'")
    if axis not in ("p", "epsilon"):
        raise ConfigError("axis must be 'p' or 'epsilon'")
    other = "epsilon" if axis == "p" else "p"
    alternative = "less" if direction == "non-decreasing" else "greater"
    results: list[TrendResult] = []
    for earlier, later in zip(values, values[1:]):
        a = episodes[np.isclose(episodes[axis], earlier)]
        b = episodes[np.isclose(episodes[axis], later)]
        paired = a.merge(b, on=[other, "seed"], suffixes=("_a", "_b"))
        if paired.empty:
            raise ConfigError(f"no paired episodes between {axis}={earlier} and {axis}={later}")
        before = paired[f"{metric}_a"].to_numpy(dtype=float)
        after = paired[f"{metric}_b"].to_numpy(dtype=float)
        diff = after - before
        if len(diff) < 2 or np.allclose(diff, diff[0]):
            # Constant differences: the t statistic is undefined
            statistic = math.inf if diff.mean() > 0 else (-math.inf if diff.mean() < 0 else 0.0)
            violated = diff.mean() < 0 if alternative == "less" else diff.mean() > 0
            p_value = 0.0 if violated else 1.0
        else:
            test = scipy_stats.ttest_rel(after, before, alternative=alternative)
            statistic, p_value = float(test.statistic), float(test.pvalue)
        results.append(
            TrendResult(
                axis=axis,
                metric=metric,
                from_value=float(earlier),
                to_value=float(later),
                mean_difference=float(diff.mean()),
                statistic=statistic,
                p_value=p_value,
                consistent=not p_value < alpha,
            )
        )
    return results
