"""
Application Entry Point

Sets up logging, parses the command line and converts escaping
exceptions into process exit codes.
"""

import sys
from typing import Optional, Sequence

import structlog

from cli.commands import build_parser, dispatch
from shared.config import get_settings
from shared.exceptions import handle_exception
from shared.logging import setup_logging

logger = structlog.get_logger(__name__)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: Arguments without the program name; defaults to sys.argv[1:]

    Returns:
        0 on success, 2 Picard non-convergence, 3 energy FAIL, 4 configuration error
    """
    setup_logging()
    settings = get_settings()
    logger.debug("starting", app=settings.APP_NAME, version=settings.APP_VERSION)
    try:
        args = build_parser().parse_args(argv)
        return dispatch(args)
    except Exception as exc:
        return handle_exception(exc)


if __name__ == "__main__":
    sys.exit(main())
