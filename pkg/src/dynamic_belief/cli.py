"""
Command-line entry point.

Subcommands:
    bench   run seeded episodes for one representation and report
    sweep   grid over assertion confidence p and split threshold epsilon
    repl    interactive belief session over a schema file
    demo    replay the four-step factoring trace and run one episode per representation
    serve   expose the REPL commands as FastMCP tools

Exit codes: 0 on success, 2 on invalid configuration, 1 on IO or other failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from typing import Any, Sequence

from rich.console import Console
from rich.table import Table

from .belief_types import BeliefConfig
from .benchmark import BenchmarkConfig, resolve_cache_dir, run_benchmark, sweep, trend_test
from .dynamic_belief import init_belief
from .errors import BeliefError, ConfigError
from .fluents import Observation, Schema
from .parser import parse_assertion
from .repl import DEMO_SCHEMA, BeliefSession, run_repl
from .utils.io_utils import read_json_strict

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "DYNAMIC_BELIEF_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# Four noiseless observations; the factoring is recorded after each
FACTORING_TRACE: tuple[tuple[str, ...], ...] = (
    ("Equal(color(A), red)",),
    ("NextTo(location(B), location(C))",),
    ("NextTo(location(C), location(D))",),
    ("Equal(color(B), blue)", "Equal(location(B), L4)"),
)


def setup_logging(level: str | None = None) -> None:
    """Attach one stream handler to the package logger (once)."""
    level_name = (level or os.environ.get(LOG_LEVEL_ENV, "INFO")).upper()
    package_logger = logging.getLogger("dynamic_belief")
    if not package_logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        package_logger.addHandler(handler)
    try:
        package_logger.setLevel(level_name)
    except ValueError:
        raise ConfigError(f"unknown log level {level_name!r}") from None


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 4x4, got {text!r}") from None


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_benchmark_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON benchmark config; flags override it")
    parser.add_argument("--grid", type=_parse_grid, help="grid size, e.g. 5x5")
    parser.add_argument(
        "--ingredients", type=int, help="total ingredients, split evenly (vegetables get the odd one)"
    )
    parser.add_argument("--vegetables", type=int)
    parser.add_argument("--seasonings", type=int)
    parser.add_argument("--rep", "--representation", dest="representation", choices=["dynamic", "static"])
    parser.add_argument("--p", type=float, help="assertion confidence")
    parser.add_argument("--epsilon", type=float, help="split threshold")
    parser.add_argument("--episodes", type=int)
    parser.add_argument("--timeout", type=float, dest="timeout_s", help="seconds per episode")
    parser.add_argument("--seed", type=int, help="first seed (seeds are seed..seed+episodes-1)")
    parser.add_argument("--seeds", type=_parse_ints, help="explicit comma-separated seed list")
    parser.add_argument("--step-cap", type=int, dest="step_cap")
    parser.add_argument("--max-joint-entries", type=int, dest="max_joint_entries")
    parser.add_argument("--out", dest="output", help="output path (suffix set by --format)")
    parser.add_argument("--format", dest="output_format", choices=["csv", "json", "both"])
    parser.add_argument("--workers", type=int, help="worker processes")
    parser.add_argument("--cache-dir", dest="cache_dir", help="on-disk episode cache directory")
    parser.add_argument(
        "--cache",
        action="store_true",
        help="cache episodes under $DYNAMIC_BELIEF_CACHE_DIR or ~/.cache/dynamic-belief",
    )
    parser.add_argument(
        "--no-timings", action="store_true", help="omit wall-clock columns (byte-stable reports)"
    )


def build_benchmark_config(args: argparse.Namespace) -> BenchmarkConfig:
    config = BenchmarkConfig.from_file(args.config) if args.config else BenchmarkConfig()
    overrides: dict[str, Any] = {
        name: getattr(args, name)
        for name in (
            "representation",
            "p",
            "epsilon",
            "episodes",
            "timeout_s",
            "seed",
            "seeds",
            "step_cap",
            "max_joint_entries",
            "output",
            "output_format",
            "workers",
        )
    }
    if args.grid:
        overrides["grid_rows"], overrides["grid_cols"] = args.grid
    if args.ingredients is not None:
        overrides["n_vegetables"] = math.ceil(args.ingredients / 2)
        overrides["n_seasonings"] = args.ingredients // 2
    if args.vegetables is not None:
        overrides["n_vegetables"] = args.vegetables
    if args.seasonings is not None:
        overrides["n_seasonings"] = args.seasonings
    if args.no_timings:
        overrides["include_timings"] = False
    overrides["cache_dir"] = resolve_cache_dir(args.cache_dir or config.cache_dir, args.cache)
    return config.with_overrides(**overrides)


def _summary_table(title: str, summary: dict[str, Any]) -> Table:
    table = Table(title=title)
    table.add_column("metric")
    table.add_column("value", justify="right")
    for key, value in summary.items():
        if isinstance(value, dict):
            value = ", ".join(f"{k}: {v:.2f}" for k, v in value.items())
        elif isinstance(value, float):
            value = f"{value:.4g}"
        table.add_row(key, str(value))
    return table


def cmd_bench(args: argparse.Namespace, console: Console) -> int:
    config = build_benchmark_config(args)
    report = run_benchmark(config)
    console.print(_summary_table(f"{config.representation} benchmark", report.summary))
    for path in report.outputs:
        console.print(f"wrote {path}")
    return 0


def cmd_sweep(args: argparse.Namespace, console: Console) -> int:
    config = build_benchmark_config(args)
    p_values = args.p_values or [config.p]
    epsilon_values = args.epsilon_values or [config.epsilon]
    report = sweep(config, p_values, epsilon_values)
    table = Table(title="sweep")
    table.add_column("p", justify="right")
    table.add_column("epsilon", justify="right")
    for metric in ("percent_solved", "mean_total_cost", "mean_factor_size"):
        table.add_column(metric, justify="right")
    for (p, epsilon), summary in report.summaries.items():
        table.add_row(
            f"{p:g}",
            f"{epsilon:g}",
            f"{summary['percent_solved']:.1f}",
            f"{summary['mean_total_cost']:.1f}",
            f"{summary['mean_factor_size']:.3f}",
        )
    console.print(table)
    if len(p_values) > 1:
        for result in trend_test(report.episodes, "p", p_values, "total_cost", "non-decreasing"):
            console.print(
                f"cost p={result.from_value:g}->{result.to_value:g}: "
                f"mean diff {result.mean_difference:+.2f}, p-value {result.p_value:.3f}, "
                f"{'consistent' if result.consistent else 'VIOLATED'}"
            )
    if len(epsilon_values) > 1:
        for result in trend_test(
            report.episodes, "epsilon", epsilon_values, "mean_factor_size", "non-increasing"
        ):
            console.print(
                f"factor size epsilon={result.from_value:g}->{result.to_value:g}: "
                f"mean diff {result.mean_difference:+.3f}, p-value {result.p_value:.3f}, "
                f"{'consistent' if result.consistent else 'VIOLATED'}"
            )
    for path in report.outputs:
        console.print(f"wrote {path}")
    return 0


def _load_schema_data(path: str | None) -> dict[str, Any]:
    if not path:
        return dict(DEMO_SCHEMA)
    data = read_json_strict(path)
    Schema.from_dict(data)
    return data


def cmd_repl(args: argparse.Namespace, console: Console) -> int:
    session = BeliefSession(
        _load_schema_data(args.schema), BeliefConfig(epsilon=args.epsilon), seed=args.seed
    )
    return run_repl(session, console=console)


def cmd_serve(args: argparse.Namespace, console: Console) -> int:
    from . import server

    session = BeliefSession(
        _load_schema_data(args.schema), BeliefConfig(epsilon=args.epsilon), seed=args.seed
    )
    server.main(session)
    return 0


def factoring_trace(config: BeliefConfig | None = None) -> list[list[list[str]]]:
    """Factor structure after each observation of FACTORING_TRACE."""
    schema = Schema.from_dict(DEMO_SCHEMA)
    belief = init_belief((), config)
    structures: list[list[list[str]]] = []
    for row in FACTORING_TRACE:
        entries = tuple(parse_assertion(text, schema) for text in row)
        belief.update(Observation(entries))
        structures.append(belief.factor_structure())
    return structures


def cmd_demo(args: argparse.Namespace, console: Console) -> int:
    for row, structure in zip(FACTORING_TRACE, factoring_trace()):
        console.print(f"observe {{{'; '.join(row)}}}", markup=False)
        console.print(
            "   -> " + " ".join("[" + ", ".join(group) + "]" for group in structure), markup=False
        )
    for representation in ("dynamic", "static"):
        config = BenchmarkConfig(
            grid_rows=3,
            grid_cols=3,
            n_vegetables=1,
            n_seasonings=1,
            representation=representation,
            episodes=1,
            timeout_s=args.timeout,
            seed=args.seed,
        )
        report = run_benchmark(config)
        console.print(_summary_table(f"{representation} episode (3x3, 2 ingredients)", report.summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynamic-belief",
        description="Dynamically factored beliefs for open-domain planning",
    )
    parser.add_argument("--log-level", help=f"logging level (default ${LOG_LEVEL_ENV} or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a benchmark")
    _add_benchmark_arguments(bench)
    bench.set_defaults(handler=cmd_bench)

    sweep_parser = sub.add_parser("sweep", help="sweep p and epsilon")
    _add_benchmark_arguments(sweep_parser)
    sweep_parser.add_argument("--p-values", type=_parse_floats, help="e.g. 1.0,0.9,0.8")
    sweep_parser.add_argument("--epsilon-values", type=_parse_floats, help="e.g. 0,0.05,0.2")
    sweep_parser.set_defaults(handler=cmd_sweep)

    for name, handler, help_text in (
        ("repl", cmd_repl, "interactive belief session"),
        ("serve", cmd_serve, "serve belief sessions over MCP"),
    ):
        session_parser = sub.add_parser(name, help=help_text)
        session_parser.add_argument("--schema", help="schema JSON file (default: demo schema)")
        session_parser.add_argument("--epsilon", type=float, default=1e-9)
        session_parser.add_argument("--seed", type=int, default=0)
        session_parser.set_defaults(handler=handler)

    demo = sub.add_parser("demo", help="factoring trace plus one episode per representation")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--timeout", type=float, default=10.0)
    demo.set_defaults(handler=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    console = Console()
    try:
        setup_logging(args.log_level)
        return int(args.handler(args, console))
    except ConfigError as exc:
        console.print(f"configuration error: {exc}", markup=False)
        return 2
    except OSError as exc:
        console.print(f"IO error: {exc}", markup=False)
        return 1
    except BeliefError as exc:
        console.print(f"error: {exc}", markup=False)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
