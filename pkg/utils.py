# FracPot/utils.py

import functools
import logging
import sys
from dataclasses import dataclass
from typing import Callable, Iterable, List, Sequence

from config import EXIT_UNHEALTHY, EXIT_USAGE

# লগিং সেটআপ
logger = logging.getLogger(__name__)

# --- Error Types ---

class DomainError(ValueError):
    """An operation was called outside its mathematical domain."""


class UnsupportedError(DomainError):
    """The request is well-formed but outside what the toolkit supports."""


class ConfigError(ValueError):
    """A run document is malformed; `path` names the offending node."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


# --- Command Guard Decorator ---
def command_guard(func: Callable) -> Callable:
    """
    Wraps a CLI command so that bad input never turns into a traceback.
    Config and precondition failures exit with the usage code before any
    sampling work; anything unexpected is logged in full and exits unhealthy.
    """
    @functools.wraps(func)
    def wrapped(args, *extra, **kwargs) -> int:
        try:
            return func(args, *extra, **kwargs)
        except ConfigError as e:
            logger.critical(f"Command '{func.__name__}' cannot use its configuration: {e}")
            sys.stderr.write(f"error: {e}\n")
            return EXIT_USAGE
        except DomainError as e:
            logger.warning(f"Command '{func.__name__}' rejected its input: {e}")
            sys.stderr.write(f"error: {e}\n")
            return EXIT_USAGE
        except Exception:
            logger.error(f"Exception while running '{func.__name__}':", exc_info=True)
            return EXIT_UNHEALTHY
    return wrapped


# --- Command Registration ---

@dataclass(frozen=True)
class Command:
    """One CLI subcommand; handler modules export lists of these for main.py."""
    name: str
    handler: Callable
    help: str
    needs_config: bool = True


# --- Report Formatting ---

def format_number(value) -> str:
    """Shortest round-trip decimal for floats; plain str for everything else."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_point(point: Iterable[float]) -> str:
    """Points go into CSV cells as space-separated coordinates."""
    return " ".join(format_number(float(c)) for c in point)


def format_table(headers: Sequence[str], rows: List[Sequence]) -> str:
    """Plain-text table with left-aligned columns, used by selftest."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    for index, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
