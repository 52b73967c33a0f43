# FracPot/handlers/audit_handlers.py

import logging
from typing import Callable, Dict

from config import AUDIT_COLUMNS, EXIT_OK, EXIT_UNHEALTHY
from audits import (
    AuditReport,
    bhp_audit,
    factorization_audit,
    far_field_exit_time,
    harnack_audit,
    harnack_pair_audit,
    kelvin_exit_time_check,
    kelvin_green_check,
    kelvin_martin_check,
    kelvin_poisson_check,
    markov_audit,
)
from geometry import Ball, contains
from records import (
    RunConfig,
    emit,
    load_run_config,
    parse_domain,
    parse_integer,
    parse_number,
    parse_payoff,
    parse_point,
    parse_points,
    parse_walk_config,
    render_csv,
    render_json,
    run_metadata,
)
from sampler import RngStream
from utils import Command, ConfigError, command_guard

# লগিং সেটআপ
logger = logging.getLogger(__name__)


def _ball_of(config: RunConfig):
    if not isinstance(config.domain, Ball):
        raise ConfigError("Kelvin checks run on a single ball domain", path="domain.kind")
    return config.domain.spec


def _inside(config: RunConfig, point) -> bool:
    return bool(contains(config.domain, point))


# --- Audit Runners ---
# Each runner reads its options from the "audit" section of the run document.

def _run_bhp(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    return bhp_audit(config.params, config.domain,
                     parse_number(section.get("r", 1.0), "audit.r"),
                     parse_integer(section.get("configurations", 4), "audit.configurations"),
                     config.walks, rng, config.workers, parse_walk_config(config.document.get("walk")))


def _run_factorization(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    p = config.params
    return factorization_audit(p, config.domain,
                               parse_point(section.get("y"), p.d, "audit.y"),
                               parse_number(section.get("p_cut", 0.5), "audit.p_cut"),
                               parse_integer(section.get("points", 8), "audit.points"),
                               config.walks, rng, config.workers,
                               parse_integer(section.get("quad_points", 32), "audit.quad_points"),
                               parse_walk_config(config.document.get("walk")))


def _run_harnack(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    p = config.params
    return harnack_audit(p, config.domain,
                         parse_point(section.get("center"), p.d, "audit.center"),
                         parse_number(section.get("r"), "audit.r"),
                         parse_number(section.get("s"), "audit.s"),
                         parse_point(section.get("y"), p.d, "audit.y"),
                         parse_integer(section.get("pairs", 8), "audit.pairs"),
                         config.walks, rng, config.workers, parse_walk_config(config.document.get("walk")))


def _run_harnack_pair(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    p = config.params
    x1 = parse_point(section.get("x1"), p.d, "audit.x1")
    x2 = parse_point(section.get("x2"), p.d, "audit.x2")
    for key, point in (("x1", x1), ("x2", x2)):
        if not _inside(config, point):
            raise ConfigError(f"point {list(point)} is not in the domain", path=f"audit.{key}")
    return harnack_pair_audit(p, config.domain, x1, x2,
                              parse_points(section.get("charges"), p.d, "audit.charges"),
                              config.walks, rng, config.workers, parse_walk_config(config.document.get("walk")))


def _run_kelvin_green(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    return kelvin_green_check(config.params, _ball_of(config),
                              parse_integer(section.get("pairs", 100), "audit.pairs"), rng)


def _run_kelvin_exit_time(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    offsets = section.get("offsets", [-0.5, 0.0, 0.5])
    if not isinstance(offsets, list) or not offsets:
        raise ConfigError("expected a non-empty list of offsets", path="audit.offsets")
    return kelvin_exit_time_check(config.params, _ball_of(config),
                                  [parse_number(t, f"audit.offsets[{i}]") for i, t in enumerate(offsets)])


def _run_kelvin_martin(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    return kelvin_martin_check(config.params, _ball_of(config),
                               parse_integer(section.get("pairs", 100), "audit.pairs"), rng)


def _run_kelvin_poisson(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    return kelvin_poisson_check(config.params, _ball_of(config),
                                parse_integer(section.get("pairs", 100), "audit.pairs"), rng)


def _run_markov(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    p = config.params
    inner = parse_domain(section.get("inner"), "audit.inner")
    points = parse_points(section.get("points"), p.d, "audit.points")
    for index, point in enumerate(points):
        if not _inside(config, point):
            raise ConfigError(f"point {list(point)} is not in the domain", path=f"audit.points[{index}]")
    return markov_audit(p, config.domain, inner, points, config.walks,
                        parse_walk_config(config.document.get("walk")), rng,
                        parse_payoff(config.document.get("payoff"), p), config.workers)


def _run_far_field(config: RunConfig, section: Dict, rng: RngStream) -> AuditReport:
    p = config.params
    x = parse_point(section.get("x"), p.d, "audit.x")
    if not _inside(config, x):
        raise ConfigError(f"point {list(x)} is not in the domain", path="audit.x")
    return far_field_exit_time(p, config.domain, x, parse_number(section.get("z_scale", 1000.0), "audit.z_scale"),
                               config.walks, parse_walk_config(config.document.get("walk")), rng, config.workers)


AUDIT_RUNNERS: Dict[str, Callable] = {
    "bhp": _run_bhp,
    "factorization": _run_factorization,
    "harnack": _run_harnack,
    "harnack-pair": _run_harnack_pair,
    "kelvin-green": _run_kelvin_green,
    "kelvin-exit-time": _run_kelvin_exit_time,
    "kelvin-martin": _run_kelvin_martin,
    "kelvin-poisson": _run_kelvin_poisson,
    "markov": _run_markov,
    "far-field": _run_far_field,
}


@command_guard
def cmd_audit(args) -> int:
    """Run one named audit; exits 0 when the report passes and 2 otherwise."""
    runner = AUDIT_RUNNERS.get(args.name)
    if runner is None:
        raise ConfigError(f"unknown audit '{args.name}'; choose from {', '.join(AUDIT_RUNNERS)}")
    config = load_run_config(args)
    report = runner(config, config.section("audit"), RngStream(config.seed))

    metadata = run_metadata(config, f"audit {args.name}")
    if config.as_json:
        text = render_json(metadata, report.to_dict())
    else:
        metadata["passed"] = report.passed
        metadata["worst_ratio"] = report.worst_ratio
        text = render_csv(metadata, AUDIT_COLUMNS, report.rows())
    if not emit(text, config.output_path):
        return EXIT_UNHEALTHY
    return EXIT_OK if report.passed else EXIT_UNHEALTHY


audit_handlers = [
    Command("audit", cmd_audit, "property audits: " + ", ".join(AUDIT_RUNNERS)),
]
