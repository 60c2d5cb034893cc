"""Command-line interface for Mixed IGA."""

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import structlog
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from . import __version__
from .collocation import PointScheme, assemble_global
from .config import Problem, RunConfig, Scheme, Settings
from .domains import BUILTIN_DOMAINS, builtin_domain
from .exceptions import ConfigurationError, MixedIgaError
from .formatter import ReportFormatter
from .geometry import MultiPatchDomain, export_geometry, load_geometry
from .logging_config import configure_logging
from .models import ConvergenceRow, SolveReport, SpaceSummary
from .smooth_space import build_smooth_space, check_gluing_conditions
from .solver import solve_case

logger = structlog.get_logger(__name__)
# stdout carries the CSV reports
console = Console(stderr=True)

DEFAULT_MESH = "1/16"


def print_error(message: str) -> None:
    """Print error message in red.

    Args:
        message: Error message to display
    """
    console.print(f"[bold red]Error:[/bold red] {message}")


def print_success(message: str) -> None:
    """Print success message in green.

    Args:
        message: Success message to display
    """
    console.print(f"[bold green]✓[/bold green] {message}")


def print_info(message: str) -> None:
    """Print info message.

    Args:
        message: Info message to display
    """
    console.print(f"[bold blue]ℹ[/bold blue] {message}")


def display_content(title: str, content: str) -> None:
    """Display formatted content in a panel.

    Args:
        title: Panel title
        content: Content to display
    """
    text = Text(content, style="cyan")
    panel = Panel(text, title=title, border_style="blue")
    console.print(panel)


def display_errors(reports: Sequence[SolveReport]) -> None:
    """Preview solve results as a table."""
    if not reports:
        return
    names = list(reports[0].errors.norms)
    table = Table(title=f"Domain {reports[0].domain}, {reports[0].problem}, {reports[0].scheme}")
    for column in ("h", "dim", "rows", *names):
        table.add_column(column, justify="right")
    for r in reports:
        table.add_row(
            r.mesh_size,
            str(r.dimension),
            str(r.rows),
            *(f"{v:.2e}" for v in r.errors.norms.values()),
        )
    console.print(table)


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per report."""
    parser = argparse.ArgumentParser(
        prog="mixed-iga",
        description="Smooth mixed degree isogeometric collocation on planar multi-patch domains",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", default="G", help=f"built-in domain ({', '.join(BUILTIN_DOMAINS)})")
    common.add_argument("--geometry-file", type=Path, help="JSON geometry file, overrides --domain")
    common.add_argument("--problem", choices=[p.value for p in Problem], default=Problem.POISSON.value)
    common.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.SUPERCONVERGENT.value)
    common.add_argument("--s", type=int, help="smoothness of the space commands (default: from --problem)")
    common.add_argument("--h", action="append", help="mesh size 1/2^i, repeatable")
    common.add_argument("--k", action="append", type=int, help="inner knot count, repeatable, overrides --h")
    common.add_argument("--out", type=Path, help="write the CSV here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed of randomized checks")
    common.add_argument("--quadrature-points", type=int, help="Gauss points per element and direction")
    common.add_argument("--check-oracles", action="store_true", help="compare operators with a chain-rule oracle")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve on each requested mesh and report errors"),
        ("convergence", "errors and estimated orders on successively halved meshes"),
        ("points", "dump the collocation equations"),
        ("space-info", "dimension of the smooth space by basis origin"),
        ("export-space", "sparse coefficient dump of the smooth basis"),
        ("export-geometry", "write the domain in the geometry file schema"),
        ("check-gluing", "derivative jumps of the inner edge functions"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    """Validate parsed arguments; convergence defaults to the full mesh ladder."""
    values: dict[str, Any] = {
        "domain": args.domain,
        "geometry_file": args.geometry_file,
        "problem": args.problem,
        "scheme": args.scheme,
        "s": args.s,
        "inner_knots": args.k,
        "out": args.out,
        "seed": args.seed,
        "quadrature_points": args.quadrature_points,
        "check_oracles": args.check_oracles,
    }
    if args.h:
        values["mesh_sizes"] = args.h
    elif args.command != "convergence":
        values["mesh_sizes"] = [DEFAULT_MESH]
    return RunConfig(**values)


def resolve_domain(config: RunConfig, settings: Settings) -> MultiPatchDomain:
    """Load the requested domain and check the scheme fits it.

    Raises:
        ConfigurationError: For the set2 and set3 schemes on a domain other than two patches
    """
    if config.geometry_file is not None:
        domain = load_geometry(config.geometry_file, settings.linearity_tolerance)
    else:
        domain = builtin_domain(config.domain)
    if config.scheme.needs_two_patches and (
        len(domain.patches) != 2 or len(domain.inner_edges) != 1
    ):
        raise ConfigurationError(
            f"scheme {config.scheme.value} needs a two-patch domain with one inner edge, "
            f"domain {domain.name} has {len(domain.patches)} patches"
        )
    return domain


class Emitter:
    """Writes CSV reports to --out or stdout and JSON sidecars beside them."""

    def __init__(self, config: RunConfig, settings: Settings, stem: str) -> None:
        self.config = config
        self.settings = settings
        self.stem = stem
        self.formatter = ReportFormatter(settings)

    def emit(self, text: str, payload: Any = None) -> None:
        target = self.config.out
        if target is not None:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
        if payload is not None:
            csv_path = target or self.settings.output_dir / f"{self.stem}.csv"
            sidecar = self.formatter.write_sidecar(csv_path, payload)
            logger.debug("sidecar_written", path=str(sidecar))


def _solve_all(config: RunConfig, settings: Settings, domain: MultiPatchDomain) -> list[SolveReport]:
    reports = []
    for k in config.knot_counts():
        report = solve_case(
            domain,
            config.problem,
            config.scheme,
            k,
            settings,
            quadrature_points=config.quadrature_points,
            check_oracles=config.check_oracles,
            seed=config.seed,
        )
        reports.append(report)
        if report.oracle_error is not None:
            print_info(f"operator oracle deviation at h = {report.mesh_size}: {report.oracle_error:.2e}")
    return reports


def cmd_solve(config: RunConfig, settings: Settings, emitter: Emitter) -> None:
    domain = resolve_domain(config, settings)
    reports = _solve_all(config, settings, domain)
    display_errors(reports)
    emitter.emit(emitter.formatter.format_solves(reports), reports)
    print_success(f"solved {len(reports)} mesh(es) on domain {domain.name}")


def cmd_convergence(config: RunConfig, settings: Settings, emitter: Emitter) -> None:
    if len(config.knot_counts()) < 2:
        raise ConfigurationError("a convergence study needs at least two meshes")
    domain = resolve_domain(config, settings)
    reports = _solve_all(config, settings, domain)
    display_errors(reports)
    rows = ConvergenceRow.from_reports(reports)
    emitter.emit(emitter.formatter.format_convergence(rows), rows)
    print_success(f"convergence study over {len(rows)} meshes on domain {domain.name}")


def cmd_points(config: RunConfig, settings: Settings, emitter: Emitter) -> None:
    domain = resolve_domain(config, settings)
    k = config.knot_counts()[0]
    dimension = None
    if config.scheme is Scheme.SET3:
        dimension = build_smooth_space(domain, config.problem.smoothness, k, settings).dimension
    points = assemble_global(
        domain, PointScheme(config.scheme, config.problem.smoothness, k), config.problem, settings, dimension
    )
    emitter.emit(emitter.formatter.format_points(points), points)
    print_info(f"{len(points)} equations on domain {domain.name}")


def cmd_space_info(config: RunConfig, settings: Settings, emitter: Emitter) -> None:
    domain = resolve_domain(config, settings)
    summaries = [
        SpaceSummary.from_space(build_smooth_space(domain, config.smoothness, k, settings))
        for k in config.knot_counts()
    ]
    texts = [emitter.formatter.format_space_info(summary) for summary in summaries]
    for summary, text in zip(summaries, texts, strict=True):
        display_content(f"W^{summary.s} on domain {summary.domain}", text)
    emitter.emit("\n".join(texts) + "\n", summaries)


def cmd_export_space(config: RunConfig, settings: Settings, emitter: Emitter) -> None:
    domain = resolve_domain(config, settings)
    space = build_smooth_space(domain, config.smoothness, config.knot_counts()[0], settings)
    emitter.emit("\n".join(space.export_lines()) + "\n")
    print_info(f"exported {space.dimension} basis functions")


def cmd_export_geometry(config: RunConfig, settings: Settings, emitter: Emitter) -> None:
    domain = resolve_domain(config, settings)
    emitter.emit(export_geometry(domain) + "\n")


def cmd_check_gluing(config: RunConfig, settings: Settings, emitter: Emitter) -> None:
    domain = resolve_domain(config, settings)
    checks = check_gluing_conditions(domain, config.smoothness, config.knot_counts()[0])
    emitter.emit(emitter.formatter.format_gluing(checks), checks)
    worst = max((c.max_jump for c in checks), default=0.0)
    print_info(f"largest relative derivative jump: {worst:.2e}")


COMMANDS: dict[str, Callable[[RunConfig, Settings, Emitter], None]] = {
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "points": cmd_points,
    "space-info": cmd_space_info,
    "export-space": cmd_export_space,
    "export-geometry": cmd_export_geometry,
    "check-gluing": cmd_check_gluing,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Main execution function.

    Args:
        argv: Command-line arguments without the program name

    Returns:
        Exit code (0 for success, 1 for error, 130 when interrupted)
    """
    args = build_parser().parse_args(argv)
    try:
        settings = Settings()
        configure_logging(settings.log_level)
        config = make_config(args)

        logger.info(
            "starting_mixed_iga",
            command=args.command,
            domain=config.domain if config.geometry_file is None else str(config.geometry_file),
            problem=config.problem.value,
            scheme=config.scheme.value,
        )
        stem = f"{args.command}_{config.domain}_{config.problem.value}_{config.scheme.value}"
        COMMANDS[args.command](config, settings, Emitter(config, settings, stem))
        logger.info("mixed_iga_completed", command=args.command)
        return 0

    except ValidationError as e:
        print_error("Configuration validation failed:")
        console.print(e)
        logger.error("config_validation_error", error=str(e))
        return 1

    except MixedIgaError as e:
        print_error(str(e))
        logger.error("application_error", error=str(e), error_type=type(e).__name__)
        return 1

    except KeyboardInterrupt:
        print_info("Operation cancelled by user")
        logger.info("operation_cancelled")
        return 130

    except Exception as e:
        print_error(f"Unexpected error: {e}")
        logger.exception("unexpected_error", error=str(e))
        return 1


def main() -> None:
    """CLI entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
