# FracPot/handlers/classify_handler.py

import logging

from config import EXIT_OK, EXIT_UNDETERMINED, EXIT_UNHEALTHY, INFINITY_BUDGET_LEVELS, SHELL_COUNT, SHELL_POINTS, SHELL_WALKS
from analysis import UNDETERMINED, classify_boundary_point, classify_infinity
from records import emit, load_run_config, parse_integer, parse_point, parse_walk_config, render_json, run_metadata
from sampler import RngStream
from utils import Command, ConfigError, command_guard

# লগিং সেটআপ
logger = logging.getLogger(__name__)


@command_guard
def cmd_classify(args) -> int:
    """
    Accessibility verdict for a boundary point, or for infinity when the
    target is the string "infinity". Always emits JSON; exits 3 when the
    verdict is undetermined.
    """
    config = load_run_config(args)
    p = config.params
    section = config.section("classify")
    target = section.get("target")
    if target is None:
        raise ConfigError("missing field 'target'", path="classify")
    rng = RngStream(config.seed)

    if target == "infinity":
        probe = parse_point(section.get("probe"), p.d, "classify.probe")
        levels = parse_integer(section.get("levels", INFINITY_BUDGET_LEVELS), "classify.levels")
        result = classify_infinity(p, config.domain, probe, rng, budget=config.walks, levels=levels,
                                   workers=config.workers, cross_check=bool(section.get("cross_check", False)))
    else:
        y = parse_point(target, p.d, "classify.target")
        result = classify_boundary_point(
            p, config.domain, y, rng,
            budget=parse_integer(section.get("budget", SHELL_WALKS), "classify.budget"),
            shells=parse_integer(section.get("shells", SHELL_COUNT), "classify.shells"),
            points_per_shell=parse_integer(section.get("points_per_shell", SHELL_POINTS),
                                           "classify.points_per_shell"),
            workers=config.workers,
            cfg=parse_walk_config(config.document.get("walk")),
        )

    body = result.to_dict()
    body["I_f"] = result.value
    if not emit(render_json(run_metadata(config, "classify"), body), config.output_path):
        return EXIT_UNHEALTHY
    logger.info(f"classify: verdict {result.verdict}")
    return EXIT_UNDETERMINED if result.verdict == UNDETERMINED else EXIT_OK


classify_handlers = [
    Command("classify", cmd_classify, "accessibility of a boundary point or of infinity"),
]
