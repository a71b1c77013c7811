"""Main CLI interface for ridesim."""
from typing import Optional

import click

from .. import __version__
from ..config import LastStopStrategy
from .commands import bench_command, build_ch_command, init_command, run_command, validate_command
from .utils import configure_logging

STRATEGIES = click.Choice([s.value for s in LastStopStrategy])


@click.group(invoke_without_command=True)
@click.version_option(version=__version__, prog_name="ridesim")
@click.option('--verbose', '-v', count=True, help='Increase log output (-v info, -vv debug)')
@click.pass_context
def cli(ctx: click.Context, verbose: int) -> None:
    """Ridesim: a dynamic ridesharing dispatch engine.

    Ridesim dispatches ride requests to a vehicle fleet one by one, choosing
    the cheapest insertion of pickup and dropoff into any vehicle's route,
    and simulates the resulting schedules.
    """
    configure_logging(verbose)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@cli.command()
@click.option('--directory', '-d', default='.',
              help='Directory to initialize (default: current directory)')
@click.option('--rows', type=int, default=6, help='Grid rows (default: 6)')
@click.option('--cols', type=int, default=6, help='Grid columns (default: 6)')
@click.option('--vehicles', type=int, default=4, help='Number of vehicles (default: 4)')
@click.option('--requests', type=int, default=30, help='Number of requests (default: 30)')
@click.option('--seed', type=int, default=1, help='Random seed (default: 1)')
@click.option('--radius', type=int, default=0, help='Walking radius in ds (default: 0)')
@click.option('--force', is_flag=True, help='Overwrite existing files')
def init(directory: str, rows: int, cols: int, vehicles: int, requests: int,
         seed: int, radius: int, force: bool) -> None:
    """Scaffold a synthetic example instance."""
    init_command(directory, rows, cols, vehicles, requests, seed, radius, force)


@cli.command()
@click.option('--config', '-c', default='run.yaml',
              help='Run configuration (default: run.yaml)')
def validate(config: str) -> None:
    """Validate an instance and its run configuration."""
    validate_command(config)


@cli.command(name='build-ch')
@click.option('--network', required=True, help='Network file')
@click.option('--out', required=True, help='Cache directory to write')
def build_ch(network: str, out: str) -> None:
    """Build and cache the vehicle and pedestrian hierarchies."""
    build_ch_command(network, out)


@cli.command()
@click.option('--config', '-c', default=None, help='Run configuration file')
@click.option('--network', default=None, help='Network file')
@click.option('--vehicles', default=None, help='Vehicle file')
@click.option('--requests', default=None, help='Request file')
@click.option('--out', default=None, help='Output directory')
@click.option('--ch-cache', default=None, help='CH cache directory')
@click.option('--radius', type=int, default=None, help='Walking radius in ds')
@click.option('--strategy-pals', type=STRATEGIES, default=None, help='PALS strategy')
@click.option('--strategy-dals', type=STRATEGIES, default=None, help='DALS strategy')
@click.option('--k-elliptic', type=int, default=None, help='Lanes of elliptic searches')
@click.option('--k-pd', type=int, default=None, help='Lanes of PD-distance searches')
@click.option('--k-laststop', type=int, default=None, help='Lanes of last-stop searches')
@click.option('--sorted-buckets', type=click.Choice(['on', 'off']), default=None,
              help='Keep buckets sorted')
@click.option('--elliptic-truncation/--no-elliptic-truncation', default=None,
              help='Truncate elliptic entries at the leeway')
@click.option('--pd-radius-pruning/--no-pd-radius-pruning', default=None,
              help='Bound PD-distance searches')
@click.option('--cost-pruning/--no-cost-pruning', default=None,
              help='Prune last-stop searches by cost')
@click.option('--domination/--no-domination', default=None,
              help='Prune collective labels by domination')
@click.option('--verify-oracle', is_flag=True, default=None,
              help='Check every dispatch against brute force')
@click.option('--counters', is_flag=True, default=None, help='Write search counters')
def run(config: Optional[str], network: Optional[str], vehicles: Optional[str],
        requests: Optional[str], out: Optional[str], ch_cache: Optional[str],
        radius: Optional[int], strategy_pals: Optional[str], strategy_dals: Optional[str],
        k_elliptic: Optional[int], k_pd: Optional[int], k_laststop: Optional[int],
        sorted_buckets: Optional[str], elliptic_truncation: Optional[bool],
        pd_radius_pruning: Optional[bool], cost_pruning: Optional[bool],
        domination: Optional[bool], verify_oracle: Optional[bool],
        counters: Optional[bool]) -> None:
    """Simulate an instance and write outcomes and statistics."""
    overrides = {
        "network": network,
        "vehicles": vehicles,
        "requests": requests,
        "output": out,
        "ch_cache": ch_cache,
        "verify_oracle": verify_oracle or None,
        "counters": counters or None,
    }
    search = {
        "strategy_pals": strategy_pals,
        "strategy_dals": strategy_dals,
        "k_elliptic": k_elliptic,
        "k_pd": k_pd,
        "k_last_stop_bch": k_laststop,
        "k_last_stop_dijkstra": k_laststop,
        "sorted_buckets": None if sorted_buckets is None else sorted_buckets == 'on',
        "elliptic_truncation": elliptic_truncation,
        "pd_radius_pruning": pd_radius_pruning,
        "cost_pruning": cost_pruning,
        "domination_pruning": domination,
    }
    run_command(config, overrides, {"walk_radius": radius}, search)


@cli.command()
@click.option('--config', '-c', default='run.yaml',
              help='Run configuration (default: run.yaml)')
@click.option('--out', default=None, help='Output directory for bench.csv')
@click.option('--counters', is_flag=True, help='Add mean search counters per request')
def bench(config: str, out: Optional[str], counters: bool) -> None:
    """Compare last-stop strategies and bucket sorting on one instance."""
    bench_command(config, out, counters)


if __name__ == '__main__':
    cli()
