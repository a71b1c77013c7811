"""CLI utilities for common patterns and error handling."""
import functools
import logging
from typing import Any, Callable, Dict

import click

from ..oracle import OracleMismatchError


def handle_cli_errors(func: Callable) -> Callable:
    """Decorator to standardize CLI error handling."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.Abort:
            raise
        except FileNotFoundError as e:
            click.echo(f"❌ File not found: {e}", err=True)
            raise click.Abort()
        except ValueError as e:
            click.echo(f"❌ Configuration error: {e}", err=True)
            raise click.Abort()
        except OracleMismatchError as e:
            click.echo(f"❌ Oracle mismatch: {e}", err=True)
            raise click.Abort()
        except Exception as e:
            click.echo(f"❌ {func.__name__} failed: {e}", err=True)
            raise click.Abort()
    return wrapper


def configure_logging(verbose: int) -> None:
    """Map -v counts to log levels: warnings by default, then info, then debug."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def success_message(message: str) -> None:
    """Display a standardized success message."""
    click.echo(f"✅ {message}")


def info_message(message: str) -> None:
    """Display a standardized info message."""
    click.echo(f"📋 {message}")


def step_message(message: str) -> None:
    """Display a step/action message."""
    click.echo(f"🔧 {message}")


def results_summary(title: str, results: Dict[str, Any]) -> None:
    """Display a formatted results summary."""
    click.echo(f"\n📊 {title}:")
    for key, value in results.items():
        if isinstance(value, (list, tuple)):
            value = ', '.join(str(v) for v in value)
        elif isinstance(value, float):
            value = f"{value:.1f}"
        click.echo(f"  {key}: {value}")


def format_validation_results(results: Dict[str, Any]) -> None:
    """Format and display validation results."""
    info_message("Validation Results:")
    for name in ("network", "vehicles", "requests"):
        click.echo(f"  {name}: {results[name]}")

    if results['errors']:
        click.echo("\n❌ Validation Errors:")
        for error in results['errors']:
            click.echo(f"  • {error}")
        raise click.Abort()
    else:
        success_message("Instance and configuration are valid!")


def format_init_results(results: Dict[str, Any]) -> None:
    """Format and display the files written by init."""
    for name in results['written']:
        click.echo(f"Created {name}")
    for name in results['skipped']:
        click.echo(f"{name} already exists, skipping")
    success_message("Example instance initialized successfully!")
    click.echo(
        f"📋 {results['vertices']} vertices, {results['vehicles']} vehicles, {results['requests']} requests"
    )
    click.echo("\nNext steps:")
    click.echo("1. Run 'ridesim validate -c run.yaml' to check the instance")
    click.echo("2. Run 'ridesim run -c run.yaml' to simulate it")
