# FracPot/handlers/estimate_handlers.py

import logging
from typing import List, Sequence

from config import (
    EXIT_OK,
    EXIT_UNHEALTHY,
    GREEN_COLUMNS,
    MARTIN_COLUMNS,
    PKERNEL_COLUMNS,
    SOLVE_COLUMNS,
)
from analysis import estimate_martin_kernel
from geometry import contains, exterior_distance
from records import (
    RunConfig,
    emit,
    load_run_config,
    parse_payoff,
    parse_walk_config,
    render_csv,
    render_json,
    run_metadata,
)
from sampler import (
    MCEstimate,
    RngStream,
    estimate_exit_time,
    estimate_green,
    estimate_harmonic_expectation,
    estimate_poisson_kernel,
)
from utils import Command, ConfigError, command_guard

# লগিং সেটআপ
logger = logging.getLogger(__name__)


# --- Shared Helpers ---

def require_inside(config: RunConfig, points: Sequence, key: str):
    """Fail fast: every listed point must lie in the domain before any walk starts."""
    for index, point in enumerate(points):
        if not contains(config.domain, point):
            raise ConfigError(f"point {list(point)} is not in the domain", path=f"{key}[{index}]")


def require_away(config: RunConfig, points: Sequence, key: str):
    for index, point in enumerate(points):
        if not exterior_distance(config.domain, point) > 0:
            raise ConfigError(f"point {list(point)} is not at a certified positive distance from the domain",
                              path=f"{key}[{index}]")


def finish(config: RunConfig, command: str, headers: List[str], rows: List[list],
           estimates: Sequence[MCEstimate], body: dict) -> int:
    metadata = run_metadata(config, command)
    text = render_json(metadata, body) if config.as_json else render_csv(metadata, headers, rows)
    if not emit(text, config.output_path):
        return EXIT_UNHEALTHY
    unhealthy = [e for e in estimates if not e.healthy]
    if unhealthy:
        logger.warning(f"{command}: {len(unhealthy)} of {len(estimates)} estimates were flagged")
        return EXIT_UNHEALTHY
    return EXIT_OK


def _estimate_rows(points, estimates) -> List[list]:
    return [[x, e.mean, e.stderr, e.n, e.censored_fraction] for x, e in zip(points, estimates)]


# --- Commands ---

@command_guard
def cmd_solve(args) -> int:
    """Harmonic expectation of a named payoff at each listed point."""
    config = load_run_config(args)
    p = config.params
    payoff = parse_payoff(config.document.get("payoff"), p)
    cfg = parse_walk_config(config.document.get("walk"))
    points = config.points()
    require_inside(config, points, "points")

    rng = RngStream(config.seed)
    estimates = [estimate_harmonic_expectation(p, config.domain, x, payoff, config.walks, cfg,
                                               rng.child(j), config.workers)
                 for j, x in enumerate(points)]
    body = {"results": [{"x": list(x), **e.to_dict()} for x, e in zip(points, estimates)]}
    return finish(config, "solve", SOLVE_COLUMNS, _estimate_rows(points, estimates), estimates, body)


@command_guard
def cmd_exit_time(args) -> int:
    """Expected exit time at each listed point."""
    config = load_run_config(args)
    p = config.params
    cfg = parse_walk_config(config.document.get("walk"))
    points = config.points()
    require_inside(config, points, "points")

    rng = RngStream(config.seed)
    estimates = [estimate_exit_time(p, config.domain, x, config.walks, cfg, rng.child(j), config.workers)
                 for j, x in enumerate(points)]
    body = {"results": [{"x": list(x), **e.to_dict()} for x, e in zip(points, estimates)]}
    return finish(config, "exit-time", SOLVE_COLUMNS, _estimate_rows(points, estimates), estimates, body)


@command_guard
def cmd_pkernel(args) -> int:
    """Poisson kernel P_D(x, y) for every (point, target) pair."""
    config = load_run_config(args)
    p = config.params
    cfg = parse_walk_config(config.document.get("walk"))
    points = config.points()
    targets = config.points("targets")
    require_inside(config, points, "points")
    require_away(config, targets, "targets")

    rng = RngStream(config.seed)
    rows, estimates, results = [], [], []
    for j, x in enumerate(points):
        for k, y in enumerate(targets):
            e = estimate_poisson_kernel(p, config.domain, x, y, config.walks, cfg,
                                        rng.child(j * len(targets) + k), config.workers)
            estimates.append(e)
            rows.append([x, y, e.mean, e.stderr, e.n, e.censored_fraction])
            results.append({"x": list(x), "y": list(y), **e.to_dict()})
    return finish(config, "pkernel", PKERNEL_COLUMNS, rows, estimates, {"results": results})


@command_guard
def cmd_green(args) -> int:
    """Green function G_D(x, v) for every (point, pole) pair."""
    config = load_run_config(args)
    p = config.params
    cfg = parse_walk_config(config.document.get("walk"))
    points = config.points()
    poles = config.points("poles")
    require_inside(config, points, "points")
    require_inside(config, poles, "poles")

    rng = RngStream(config.seed)
    rows, estimates, results = [], [], []
    for x in points:
        for k, v in enumerate(poles):
            if tuple(x) == tuple(v):
                raise ConfigError("Green function poles must differ from the points", path=f"poles[{k}]")
    for j, x in enumerate(points):
        for k, v in enumerate(poles):
            e = estimate_green(p, config.domain, x, v, config.walks, cfg,
                               rng.child(j * len(poles) + k), config.workers)
            estimates.append(e)
            rows.append([x, v, e.mean, e.stderr, e.n, e.censored_fraction])
            results.append({"x": list(x), "v": list(v), **e.to_dict()})
    return finish(config, "green", GREEN_COLUMNS, rows, estimates, {"results": results})


@command_guard
def cmd_martin(args) -> int:
    """Martin kernel ratios along a sequence of sample radii towards a boundary point."""
    config = load_run_config(args)
    p = config.params
    cfg = parse_walk_config(config.document.get("walk"))
    martin = config.section("martin")
    x, x0 = config.point("x"), config.point("x0")
    y = config.point("y")
    require_inside(config, [x, x0], "x/x0")
    radii = martin.get("radii", [0.1, 0.05, 0.025, 0.0125])
    if not isinstance(radii, list) or not radii:
        raise ConfigError("expected a non-empty list of radii", path="martin.radii")

    result = estimate_martin_kernel(p, config.domain, x, x0, y, radii, config.walks, cfg,
                                    RngStream(config.seed), config.workers, martin.get("direction"))
    rows = [[level.radius, level.ratio.mean, level.ratio.stderr, level.ratio.n] for level in result.levels]
    rows.append(["extrapolated", result.extrapolated.mean, result.extrapolated.stderr, result.extrapolated.n])
    estimates = [level.ratio for level in result.levels]
    return finish(config, "martin", MARTIN_COLUMNS, rows, estimates, result.to_dict())


estimate_handlers = [
    Command("solve", cmd_solve, "harmonic expectation of a payoff at the exit position"),
    Command("pkernel", cmd_pkernel, "Poisson kernel by the collision estimator"),
    Command("exit-time", cmd_exit_time, "expected exit time"),
    Command("green", cmd_green, "Green function via a bounding ball"),
    Command("martin", cmd_martin, "Martin kernel level sequence"),
]
