"""
Command-line routes

Maps the ``converge``, ``energy`` and ``simulate`` subcommands onto
``cli.service``; flags override values from the JSON configuration.
"""

import argparse
from pathlib import Path
from typing import Any, NoReturn

from cli.schemas import load_config
from cli.service import run_command
from shared.config import get_settings
from shared.exceptions import ConfigError


class CommandParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as configuration errors."""

    def error(self, message: str) -> NoReturn:
        raise ConfigError(f"{self.prog}: {message}")


def parse_levels(text: str) -> list[int]:
    """'4,8,16' -> [4, 8, 16]."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid level list {text!r}") from exc


def build_parser() -> CommandParser:
    settings = get_settings()
    parser = CommandParser(
        prog=settings.APP_NAME,
        description="Cahn-Hilliard-MHD finite element solver",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {settings.APP_VERSION}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    converge = commands.add_parser("converge", help="Manufactured-solution convergence study")
    converge.add_argument("--config", type=Path, help="JSON run configuration")
    converge.add_argument("--levels", type=parse_levels, help="Comma-separated mesh levels")
    converge.add_argument("--workers", type=int, help="Worker processes for the levels")

    energy = commands.add_parser("energy", help="Unforced energy-stability run")
    energy.add_argument("--config", type=Path, help="JSON run configuration")
    energy.add_argument("--dt", type=float, help="Time step")
    energy.add_argument("--steps", type=int, help="Number of steps")
    energy.add_argument("--seed", type=int, help="Seed for random initial data")
    energy.add_argument("--n", type=int, help="Subdivisions per side")
    energy.add_argument(
        "--initial", choices=["cosine", "pure", "random"], help="Initial phase field"
    )

    simulate = commands.add_parser("simulate", help="Run to t_final with diagnostics")
    simulate.add_argument("--config", type=Path, help="JSON run configuration")
    simulate.add_argument("--n", type=int, help="Subdivisions per side")
    simulate.add_argument("--t-final", dest="t_final", type=float, help="Final time")
    simulate.add_argument(
        "--snapshot-every", dest="snapshot_every", type=int, help="Snapshot interval in steps"
    )

    for sub in (converge, energy, simulate):
        sub.add_argument("--output-dir", dest="output_dir", help="Directory for CSV and VTK output")
    return parser


_NOT_OVERRIDES = {"command", "config"}


def overrides_from(args: argparse.Namespace) -> dict[str, Any]:
    values = {key: value for key, value in vars(args).items() if key not in _NOT_OVERRIDES}
    values["mode"] = args.command
    return values


def dispatch(args: argparse.Namespace) -> int:
    """
    Load the configuration for parsed arguments and run the command.

    Returns:
        Exit status 0; failures surface as exceptions
    """
    config = load_config(args.config, overrides_from(args))
    run_command(args.command, config)
    return 0
