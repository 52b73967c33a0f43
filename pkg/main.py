# FracPot/main.py

import argparse
import logging
import sys
from typing import List, Optional

# --- Configuration Imports ---
from config import EXIT_USAGE, TOOL_NAME, TOOL_VERSION

# --- Handlers Imports ---
from handlers.audit_handlers import audit_handlers
from handlers.classify_handler import classify_handlers
from handlers.estimate_handlers import estimate_handlers
from handlers.selftest_handler import selftest_handlers

# --- Logging Setup ---
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
logger = logging.getLogger(__name__)


def setup_logging(verbose: bool) -> None:
    """Logs go to stderr so that stdout carries only results."""
    logging.basicConfig(format=LOG_FORMAT, level=logging.DEBUG if verbose else logging.INFO,
                        stream=sys.stderr, force=True)


def _add_common_options(parser: argparse.ArgumentParser, needs_config: bool) -> None:
    parser.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    if not needs_config:
        return
    parser.add_argument("--config", help="run document (JSON)")
    parser.add_argument("--seed", type=int, help="override the document seed")
    parser.add_argument("--walks", type=int, help="override the walk budget per estimate")
    parser.add_argument("--workers", type=int, help="worker processes (results do not depend on this)")
    parser.add_argument("--out", help="write results here instead of stdout")
    parser.add_argument("--json", action="store_true", help="JSON output instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Walk-on-spheres toolkit for the fractional Laplacian")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")

    # --- Registering Commands ---
    # 1. Estimators (solve, pkernel, exit-time, green, martin)
    # 2. Accessibility classification
    # 3. Property audits
    # 4. Selftest
    for command in estimate_handlers + classify_handlers + audit_handlers + selftest_handlers:
        sub = subparsers.add_parser(command.name, help=command.help)
        _add_common_options(sub, command.needs_config)
        if command.name == "audit":
            sub.add_argument("name", help="which audit to run")
        if command.name == "selftest":
            sub.add_argument("--quick", action="store_true", help="closed-form checks only")
        sub.set_defaults(handler=command.handler)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse the command line, dispatch to a handler and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help/--version and 2 for bad usage
        return EXIT_USAGE if e.code else 0

    if getattr(args, "handler", None) is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    setup_logging(args.verbose)
    logger.info(f"Running '{args.command}'")
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
