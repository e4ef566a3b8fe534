"""
Command Line Interface for czgrid
"""
import logging
import sys
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional

import click

from .config import ExperimentConfig, load_config
from .errors import ConfigError, CZGridError, VerificationError
from .geometry import GroupPoint
from .services.counterexample_service import CounterexampleService
from .services.decomposition_service import DecompositionService
from .services.grid_service import GridService
from .services.maximal_service import MaximalService
from .services.output_service import OutputService

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

logger = logging.getLogger(__name__)


class _UsageExitsOne:
    """Report click usage errors with the configuration exit code"""

    def make_context(self, *args: Any, **kwargs: Any) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)  # type: ignore[misc]
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise


class CZGridCommand(_UsageExitsOne, click.Command):
    pass


class CZGridGroup(_UsageExitsOne, click.Group):
    command_class = CZGridCommand


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _fail(message: str, code: int) -> NoReturn:
    click.echo(click.style(f"✗ Error: {message}", fg="red"), err=True)
    raise click.exceptions.Exit(code)


def experiment_options(func: Callable) -> Callable:
    """Options shared by every subcommand"""
    options = [
        click.option("--config", "config_path", type=click.Path(path_type=Path), help="key = value config file"),
        click.option("--seed", type=int, help="Seed of every random draw"),
        click.option("--n", type=int, help="Horizontal dimension"),
        click.option("--j-lo", type=int, help="Lowest grid level"),
        click.option("--j-hi", type=int, help="Highest grid level"),
        click.option("--trials", type=int, help="Random trials"),
        click.option("--out", type=click.Path(path_type=Path), help="Output directory"),
        click.option("--log-level", help="DEBUG, INFO, WARNING or ERROR"),
        click.option("--csv/--no-csv", "csv", default=None, help="Mirror records as CSV"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(config_path: Optional[Path], flags: Dict[str, Any]) -> ExperimentConfig:
    try:
        config = load_config(config_path, flags)
    except ConfigError as e:
        _fail(str(e), EXIT_USAGE)
    _configure_logging(config.log_level)
    return config


def handle_errors(func: Callable) -> Callable:
    """Map library exceptions to exit codes"""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except VerificationError as e:
            _fail(str(e), EXIT_FAILED)
        except ConfigError as e:
            _fail(str(e), EXIT_USAGE)
        except CZGridError as e:
            _fail(str(e), EXIT_USAGE)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise
        except click.exceptions.Exit:
            raise
        except Exception as e:
            click.echo(click.style(f"✗ Unexpected error: {e}", fg="red"), err=True)
            raise click.exceptions.Exit(EXIT_USAGE)

    return wrapper


@click.group(cls=CZGridGroup)
def cli():
    """czgrid - dyadic Calderón–Zygmund grids on the ax+b group"""
    pass


@cli.command()
@experiment_options
@handle_errors
def grid(config_path, **flags):
    """Build the grid and verify its partition, nesting and growth properties"""
    config = _load(config_path, flags)
    report = GridService.verify(config)

    output = OutputService(config.out)
    output.write_records("grid", report.properties, config.csv)
    output.write_summary("grid", report)

    for prop in report.properties:
        mark = click.style("✓", fg="green") if prop.passed else click.style("✗", fg="red")
        click.echo(f"{mark} {prop.name}: {prop.violations} violations in {prop.checked} checks")
    if not report.passed:
        _fail("grid properties violated", EXIT_FAILED)
    click.echo(click.style(f"✓ Grid report written to: {output.path('grid', 'json')}", fg="green"))


@cli.command()
@experiment_options
@handle_errors
def maximal(config_path, **flags):
    """Weak (1,1), Fefferman–Stein and distributional inequality sweeps"""
    config = _load(config_path, flags)
    records, summary = MaximalService.run(config)

    output = OutputService(config.out)
    output.write_records("maximal", records, config.csv)
    output.write_summary("maximal", summary)

    click.echo(f"weak (1,1) ratio: {summary.weak11_max:.6f}")
    for p, value in summary.a_p.items():
        click.echo(f"A_{p}: {value:.6f}")
    click.echo(f"K: {summary.k_fit:.6f}")
    if not summary.finite:
        _fail("non-finite maximal constants", EXIT_FAILED)
    if config.require_stability and not summary.stable:
        _fail("fitted constants are not stable", EXIT_FAILED)
    click.echo(click.style(f"✓ Maximal summary written to: {output.path('maximal', 'json')}", fg="green"))


@cli.command()
@experiment_options
@handle_errors
def czdecomp(config_path, **flags):
    """Calderón–Zygmund decompositions of random functions over an α sweep"""
    config = _load(config_path, flags)
    records = DecompositionService.run(config)

    output = OutputService(config.out)
    output.write_records("czdecomp", records, config.csv)

    failed = [r for r in records if r.violations]
    click.echo(f"{len(records)} decompositions, {len(failed)} with violations")
    if failed:
        first = failed[0]
        _fail(f"trial {first.trial}, α = {first.alpha:.6g}: {first.violations[0]}", EXIT_FAILED)
    click.echo(click.style(f"✓ Records written to: {output.path('czdecomp', 'jsonl')}", fg="green"))


@cli.command()
@experiment_options
@handle_errors
def counterexample(config_path, **flags):
    """Atoms whose dyadic H¹ norm grows without bound"""
    config = _load(config_path, flags)
    records, summary = CounterexampleService.run(config)

    output = OutputService(config.out)
    output.write_records("counterexample", records, config.csv)
    output.write_summary("counterexample", summary)

    for r in records:
        click.echo(f"ℓ = {r.ell:4d}  pairing = {r.pairing:.10f}  H¹_D lower = {r.h1d_lower:.6f}")
    CounterexampleService.check(records, summary)
    click.echo(click.style(f"✓ Table written to: {output.path('counterexample', 'jsonl')}", fg="green"))


def _parse_point(text: str) -> GroupPoint:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}")
    if len(values) < 2:
        raise click.BadParameter("a point needs x coordinates and t")
    return GroupPoint(tuple(values[:-1]), values[-1])


@cli.command()
@experiment_options
@click.option("--point", "points", multiple=True, help="x1,...,xn,t of a point to locate")
@click.option("--level", type=int, default=0, show_default=True, help="Level of located ids")
@handle_errors
def chain(config_path, points, level, **flags):
    """Dump the chain entries of both halves and optional located ids"""
    config = _load(config_path, flags)
    located: List[GroupPoint] = [_parse_point(p) for p in points]
    records = GridService.dump(config, located, level)

    output = OutputService(config.out)
    output.write_records("chain", records, config.csv, sort=False)
    click.echo(click.style(f"✓ {len(records)} entries written to: {output.path('chain', 'jsonl')}", fg="green"))


def main():
    """Main CLI entry point"""
    cli()


if __name__ == "__main__":
    main()
