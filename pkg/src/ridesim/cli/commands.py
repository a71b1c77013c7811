"""CLI command implementations."""
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import click

from ..ch import build_ch, save_ch
from ..config import SearchConfig
from ..generator import bench_combinations, generate_instance
from ..loader import check_instance, load_requests, load_vehicles, merge_run_config, validate_instance
from ..network import load_network_pair
from ..report import bench_row, outcome_record, write_bench
from ..simulation import build_hierarchies, run, simulate
from .utils import (
    format_init_results, format_validation_results, handle_cli_errors, info_message,
    results_summary, step_message, success_message,
)


@handle_cli_errors
def init_command(directory: str, rows: int, cols: int, vehicles: int, requests: int,
                 seed: int, radius: int, force: bool) -> None:
    """Scaffold a synthetic grid instance with a run.yaml."""
    target = Path(directory).resolve()
    click.echo(f"Initializing ridesim instance in: {target}")
    results = generate_instance(target, rows, cols, vehicles, requests, seed, radius, force)
    format_init_results(results)


@handle_cli_errors
def validate_command(config: str) -> None:
    """Load and validate an instance and its run configuration."""
    run_config = merge_run_config(config)
    click.echo(f"Validating instance of: {Path(config).resolve()}")
    format_validation_results(validate_instance(run_config))


@handle_cli_errors
def build_ch_command(network: str, out: str) -> None:
    """Build vehicle and pedestrian hierarchies and write them to a cache directory."""
    pair = load_network_pair(network)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name, graph in (("veh", pair.veh), ("psg", pair.psg)):
        step_message(f"Contracting {name} graph ({graph.vertex_count} vertices, {len(graph)} edges)")
        start = time.perf_counter()
        ch = build_ch(graph)
        save_ch(ch, graph, out_dir / f"{name}.rsch")
        summary[f"{name} shortcuts"] = ch.shortcut_count
        summary[f"{name} build time (s)"] = time.perf_counter() - start
    success_message(f"CH cache written to {out_dir}")
    results_summary("Hierarchies", summary)


@handle_cli_errors
def run_command(config: Optional[str], overrides: Dict[str, Any], cost: Dict[str, Any],
                search: Dict[str, Any]) -> None:
    """Simulate an instance and write the outcome log and statistics."""
    run_config = merge_run_config(config, overrides, cost, search)
    step_message(f"Simulating requests from {run_config.requests}")
    if run_config.verify_oracle:
        info_message("Oracle verification enabled - every dispatch is checked by brute force")

    start = time.perf_counter()
    result = run(run_config)
    elapsed = time.perf_counter() - start

    success_message(f"Simulation completed in {elapsed:.2f}s")
    if result.fallbacks:
        info_message(f"{result.fallbacks} collective last-stop searches fell back to individual searches")
    click.echo(f"📁 Output directory: {run_config.output}")
    results_summary("Statistics", result.stats.as_dict())


@handle_cli_errors
def bench_command(config: str, out: Optional[str], counters: bool) -> None:
    """Run the instance under every strategy and bucket combination and compare outcomes."""
    base = merge_run_config(config, {"output": out} if out else None)
    network = load_network_pair(base.network)
    vehicles = load_vehicles(base.vehicles)
    requests = load_requests(base.requests)
    errors = check_instance(network, vehicles, requests)
    if errors:
        raise ValueError("Invalid instance: " + "; ".join(errors))
    hierarchies = build_hierarchies(network, base.ch_cache)

    rows: List[Dict[str, Any]] = []
    reference = None
    for combination in bench_combinations():
        label = ", ".join(f"{k}={v}" for k, v in combination.items())
        step_message(f"Running {label}")
        search = SearchConfig(**{**base.search.model_dump(), **combination})
        result = simulate(network, vehicles, requests, base.cost, search, hierarchies=hierarchies)
        log = [outcome_record(o) for o in result.outcomes]
        if reference is None:
            reference = log
        elif log != reference:
            raise RuntimeError(f"outcome log of {label} differs from the first configuration")
        rows.append(bench_row(
            combination, result.mean_timings_ms(), len(result.outcomes),
            result.phase_counters() if counters else None,
        ))

    out_dir = Path(base.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = write_bench(out_dir / "bench.csv", rows)
    success_message(f"All {len(rows)} configurations produced identical outcome logs")
    click.echo(f"📄 Bench table: {path}")
