# FracPot/handlers/selftest_handler.py

import logging
import math
import sys
from typing import Callable, List, Tuple

import numpy as np

from config import EXIT_OK, EXIT_UNHEALTHY, SELFTEST_SEED, SELFTEST_WALKS
from analysis import ACCESSIBLE, INACCESSIBLE, cusp_test, thorn_integral_test
from audits import kelvin_exit_time_check, kelvin_green_check, kelvin_martin_check, kelvin_poisson_check
from geometry import Ball, Difference, WholeSpace
import kernels
from kernels import BallSpec, StableParams
from numerics import adaptive_quad
from sampler import (
    IndicatorPayoff,
    RngStream,
    WalkConfig,
    estimate_exit_time,
    estimate_harmonic_expectation,
    estimate_poisson_kernel,
    estimate_two_stage_expectation,
    sample_ball_exit_radius,
)
from utils import Command, command_guard, format_table

# লগিং সেটআপ
logger = logging.getLogger(__name__)

SIGMAS = 4.0
GRID = [(d, alpha) for d in (1, 2, 3) for alpha in (0.5, 1.0, 1.5)]


def poisson_mass(p: StableParams) -> float:
    """Total mass of the unit-ball Poisson kernel seen from the centre."""
    unit = BallSpec(tuple(0.0 for _ in range(p.d)), 1.0)
    origin = np.zeros(p.d)

    def radial(rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        points = np.zeros((len(rho), p.d))
        points[:, 0] = rho
        return rho ** (p.d - 1) * np.asarray(kernels.ball_poisson(p, unit, origin, points), dtype=float)

    return kernels.surface_area(p.d) * adaptive_quad(radial, 1.0, math.inf, tol=1e-12).value


# --- Deterministic Checks ---

def check_poisson_normalization() -> Tuple[bool, str]:
    worst = max(abs(poisson_mass(StableParams(d, alpha)) - 1.0) for d, alpha in GRID)
    return worst < 1e-6, f"max |mass - 1| = {worst:.3e}"


def check_green_paths() -> Tuple[bool, str]:
    p = StableParams(3, 1.0)
    ball = BallSpec((0.0, 0.0, 0.0), 1.0)
    x, v = np.array([0.2, -0.1, 0.3]), np.array([-0.4, 0.25, 0.1])
    beta = kernels.ball_green(p, ball, x, v, method="beta")
    quad = kernels.ball_green(p, ball, x, v, method="quad")
    gap = abs(beta - quad) / abs(beta)
    return gap < 1e-9, f"relative gap {gap:.3e}"


def check_unit_exit_time() -> Tuple[bool, str]:
    value = kernels.exit_time_const(StableParams(1, 1.0))
    return abs(value - 1.0) < 1e-12, f"s_B(0) = {value!r} for d=1, alpha=1"


def check_ball_martin() -> Tuple[bool, str]:
    value = kernels.ball_martin(StableParams(2, 1.0), 1.0, (0.5, 0.0), (1.0, 0.0))
    return abs(value - 2.0 * math.sqrt(3.0)) < 1e-12, f"M = {value!r}"


def check_thorn_dichotomy() -> Tuple[bool, str]:
    wrong = []
    for alpha in (0.5, 1.0, 1.5):
        p = StableParams(2, alpha)
        for gamma in (0.25, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0):
            expected = INACCESSIBLE if gamma > 1.0 else ACCESSIBLE
            if thorn_integral_test(p, gamma).verdict != expected:
                wrong.append((alpha, gamma))
    p = StableParams(2, 1.0)
    if cusp_test(p, 0.5).verdict != INACCESSIBLE or cusp_test(p, 1.5).verdict != ACCESSIBLE:
        wrong.append("cusp")
    return not wrong, "all verdicts match" if not wrong else f"mismatches: {wrong}"


def check_kelvin() -> Tuple[bool, str]:
    rng = RngStream(SELFTEST_SEED)
    p2 = StableParams(2, 1.0)
    ball2 = BallSpec((3.0, 0.0), 1.0)
    reports = [
        kelvin_green_check(p2, ball2, 100, rng.child(0)),
        kelvin_martin_check(p2, ball2, 100, rng.child(1)),
        kelvin_poisson_check(p2, ball2, 100, rng.child(2)),
        kelvin_exit_time_check(StableParams(3, 1.0), BallSpec((4.0, 0.0, 0.0), 1.0), offsets=(0.0,)),
    ]
    failed = [r.name for r in reports if not r.passed]
    worst = max(r.worst_ratio for r in reports)
    return not failed, f"worst deviation {worst:.3e}" + (f", failed: {failed}" if failed else "")


# --- Statistical Checks ---

def _within(value: float, target: float, stderr: float) -> bool:
    return abs(value - target) <= SIGMAS * stderr + 1e-12 * abs(target)


def check_exit_radius_tail() -> Tuple[bool, str]:
    radii = sample_ball_exit_radius(StableParams(2, 1.0), RngStream(SELFTEST_SEED, 1), SELFTEST_WALKS)
    share = float(np.mean(radii > 2.0))
    stderr = math.sqrt((1.0 / 3.0) * (2.0 / 3.0) / SELFTEST_WALKS)
    return _within(share, 1.0 / 3.0, stderr), f"P(R > 2) = {share:.4f}"


def check_exit_time_estimate() -> Tuple[bool, str]:
    p = StableParams(2, 1.0)
    unit = BallSpec((0.0, 0.0), 1.0)
    x = (0.3, 0.0)
    estimate = estimate_exit_time(p, Ball((0.0, 0.0), 1.0), x, SELFTEST_WALKS, WalkConfig(),
                                  RngStream(SELFTEST_SEED, 2))
    exact = float(kernels.ball_exit_time(p, unit, x))
    return _within(estimate.mean, exact, estimate.stderr), f"{estimate.mean:.5f} vs {exact:.5f}"


def check_collision_estimate() -> Tuple[bool, str]:
    p = StableParams(2, 1.0)
    unit = BallSpec((0.0, 0.0), 1.0)
    x, y = (0.3, 0.0), (2.0, 0.0)
    estimate = estimate_poisson_kernel(p, Ball((0.0, 0.0), 1.0), x, y, SELFTEST_WALKS, WalkConfig(),
                                       RngStream(SELFTEST_SEED, 3))
    exact = float(kernels.ball_poisson(p, unit, x, y))
    return _within(estimate.mean, exact, estimate.stderr), f"{estimate.mean:.5f} vs {exact:.5f}"


def check_two_stage() -> Tuple[bool, str]:
    p = StableParams(2, 1.0)
    outer = Ball((0.0, 0.0), 1.0)
    inner = Ball((0.2, 0.0), 0.5)
    payoff = IndicatorPayoff(Difference(WholeSpace(2), Ball((0.0, 0.0), 2.0)))
    x = (0.3, 0.1)
    direct = estimate_harmonic_expectation(p, outer, x, payoff, SELFTEST_WALKS, WalkConfig(),
                                           RngStream(SELFTEST_SEED, 4))
    staged = estimate_two_stage_expectation(p, outer, inner, x, payoff, SELFTEST_WALKS, WalkConfig(),
                                            RngStream(SELFTEST_SEED, 5))
    combined = math.hypot(direct.stderr, staged.stderr)
    return _within(direct.mean, staged.mean, combined), f"{direct.mean:.4f} vs {staged.mean:.4f}"


DETERMINISTIC_CHECKS: List[Tuple[str, Callable]] = [
    ("poisson-normalization", check_poisson_normalization),
    ("green-beta-vs-quad", check_green_paths),
    ("unit-exit-time", check_unit_exit_time),
    ("ball-martin", check_ball_martin),
    ("thorn-dichotomy", check_thorn_dichotomy),
    ("kelvin-identities", check_kelvin),
]

STATISTICAL_CHECKS: List[Tuple[str, Callable]] = [
    ("exit-radius-tail", check_exit_radius_tail),
    ("exit-time", check_exit_time_estimate),
    ("collision-estimator", check_collision_estimate),
    ("two-stage", check_two_stage),
]


def run_checks(quick: bool) -> List[Tuple[str, bool, str]]:
    checks = DETERMINISTIC_CHECKS + ([] if quick else STATISTICAL_CHECKS)
    results = []
    for name, check in checks:
        try:
            passed, note = check()
        except Exception as e:
            logger.error(f"selftest check '{name}' raised:", exc_info=True)
            passed, note = False, f"raised {type(e).__name__}: {e}"
        logger.info(f"selftest {name}: {'pass' if passed else 'FAIL'} ({note})")
        results.append((name, passed, note))
    return results


@command_guard
def cmd_selftest(args) -> int:
    """Closed-form checks, plus a reduced statistical suite unless --quick."""
    results = run_checks(bool(getattr(args, "quick", False)))
    rows = [(name, "pass" if passed else "FAIL", note) for name, passed, note in results]
    sys.stdout.write(format_table(["check", "result", "detail"], rows) + "\n")
    return EXIT_OK if all(passed for _, passed, _ in results) else EXIT_UNHEALTHY


selftest_handlers = [
    Command("selftest", cmd_selftest, "acceptance checks", needs_config=False),
]
