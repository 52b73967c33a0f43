# FracPot/audits.py
"""
Property audits: boundary Harnack cross-ratios, the Poisson kernel
factorization near a boundary point, Harnack bounds, Kelvin transform
identities, far-field exit times and strong-Markov composition.

Every audit returns an AuditReport whose `passed` flag is recomputed from the
report content by evaluate_report.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from config import (
    BHP_FINITE_CEILING,
    BHP_STABILITY_SIGMAS,
    FACTORIZATION_CEILING,
    KELVIN_EXIT_TIME_TOL,
    KELVIN_GREEN_TOL,
    MARKOV_SIGMAS,
)
from geometry import (
    Ball,
    DomainSpec,
    bounding_ball,
    contains,
    dist_lower_bound,
    exterior_distance,
    invert_ball,
    invert_point,
    sample_in_ball,
)
from kernels import (
    BallSpec,
    StableParams,
    ball_exit_time,
    ball_green,
    ball_martin_ref,
    ball_poisson,
    levy_density,
    riesz_const,
    surface_area,
)
from numerics import adaptive_quad
from sampler import (
    ConstantPayoff,
    MCEstimate,
    RngStream,
    WalkConfig,
    estimate_exit_time,
    estimate_harmonic_expectation,
    estimate_poisson_kernel,
    estimate_two_stage_exit_time,
    estimate_two_stage_expectation,
)
from utils import DomainError, UnsupportedError, format_point

logger = logging.getLogger(__name__)

MAX_RATIO = "max_ratio"
MAX_DEVIATION = "max_deviation"
STABILITY = "stability"

_CANDIDATE_DRAWS = 4096


# --- Reports ---

@dataclass(frozen=True)
class AuditSample:
    configuration: str
    lhs: float
    rhs: float
    ratio: float


@dataclass(frozen=True)
class AuditReport:
    name: str
    samples: Tuple[AuditSample, ...]
    worst_ratio: float
    passed: bool
    tolerance: float
    criterion: str
    details: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "criterion": self.criterion,
            "worst_ratio": self.worst_ratio,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "samples": [vars(s) for s in self.samples],
            "details": self.details,
        }

    def rows(self) -> List[list]:
        return [[s.configuration, s.lhs, s.rhs, s.ratio] for s in self.samples]


def evaluate_report(report: AuditReport) -> bool:
    """The pass/fail rule, as a function of the report content only."""
    worst = report.worst_ratio
    if not math.isfinite(worst):
        return False
    if report.criterion == MAX_DEVIATION:
        return worst <= report.tolerance
    if report.criterion == MAX_RATIO:
        doubled = report.details.get("doubled_worst_ratio", worst)
        return worst <= report.tolerance and math.isfinite(doubled) and doubled <= report.tolerance
    if report.criterion == STABILITY:
        gap = report.details.get("stability_gap_sigmas", math.inf)
        ceiling = report.details.get("ceiling", math.inf)
        return worst <= ceiling and gap <= report.tolerance
    raise DomainError(f"unknown audit criterion '{report.criterion}'")


def _report(name: str, samples: Sequence[AuditSample], worst: float, tolerance: float,
            criterion: str, details: Optional[Dict] = None) -> AuditReport:
    draft = AuditReport(name, tuple(samples), float(worst), False, float(tolerance), criterion,
                        dict(details or {}))
    report = replace(draft, passed=evaluate_report(draft))
    logger.info(f"Audit '{name}' finished: worst {report.worst_ratio:.6g}, passed={report.passed}")
    return report


def _draw_points(D: DomainSpec, ball: BallSpec, count: int, gen: np.random.Generator,
                 accept: Optional[Callable] = None) -> np.ndarray:
    """Up to `count` points uniform in `ball` that lie in D and pass `accept`."""
    candidates = sample_in_ball(ball, _CANDIDATE_DRAWS, gen)
    keep = np.asarray(contains(D, candidates))
    if accept is not None:
        keep &= np.asarray([accept(c) for c in candidates])
    return candidates[keep][:count]


def _product_stderr(value: float, estimates: Sequence[MCEstimate]) -> float:
    return abs(value) * math.sqrt(sum((e.stderr / e.mean) ** 2 for e in estimates if e.mean))


# --- Boundary Harnack ---

def _cross_ratio(p, D, x1, x2, y1, y2, walks, cfg, rng, workers) -> Tuple[float, float]:
    grid = {}
    for i, x in enumerate((x1, x2)):
        for j, y in enumerate((y1, y2)):
            grid[i, j] = estimate_poisson_kernel(p, D, x, y, walks, cfg, rng.child(2 * i + j), workers)
    if any(not e.mean > 0 for e in grid.values()):
        return math.inf, math.inf
    rho = grid[0, 0].mean * grid[1, 1].mean / (grid[0, 1].mean * grid[1, 0].mean)
    return rho, _product_stderr(rho, list(grid.values()))


def bhp_audit(p: StableParams, D: DomainSpec, r: float, n_config: int, walks: int, rng: RngStream,
              workers: int = 1, cfg: Optional[WalkConfig] = None) -> AuditReport:
    """
    Cross-ratios P(x1,y1)P(x2,y2) / (P(x1,y2)P(x2,y1)) for x in D cap B_{r/2}
    and y outside B_r at positive distance from D. Passes when the worst
    ratio is finite and moves by less than 2 sigma when the budget is
    quadrupled. Balls also get the closed-form ratio for comparison.
    """
    cfg = cfg or WalkConfig()
    gen = rng.generator()
    origin = tuple(0.0 for _ in range(p.d))
    xs = _draw_points(D, BallSpec(origin, r / 2.0), 2 * n_config, gen)
    shell = BallSpec(origin, 2.0 * r)
    ys = sample_in_ball(shell, _CANDIDATE_DRAWS, gen)
    ys = ys[np.linalg.norm(ys, axis=1) > r]
    ys = ys[np.asarray(exterior_distance(D, ys)) > 1e-3 * r][:2 * n_config]
    if len(xs) < 2 * n_config or len(ys) < 2 * n_config:
        raise DomainError("bhp_audit found no admissible quadruple")

    closed_ball = D.spec if isinstance(D, Ball) else None
    samples, sigmas, zscores = [], [], []
    for k in range(n_config):
        x1, x2 = xs[2 * k], xs[2 * k + 1]
        y1, y2 = ys[2 * k], ys[2 * k + 1]
        stream = rng.child(k + 1)
        rho, se = _cross_ratio(p, D, x1, x2, y1, y2, walks, cfg, stream.child(0), workers)
        rho4, se4 = _cross_ratio(p, D, x1, x2, y1, y2, 4 * walks, cfg, stream.child(1), workers)
        label = f"x1={format_point(x1)};x2={format_point(x2)};y1={format_point(y1)};y2={format_point(y2)}"
        samples.append(AuditSample(label, rho, rho4, rho / rho4 if rho4 else math.inf))
        sigmas.append((se, se4))
        if closed_ball is not None:
            exact = (ball_poisson(p, closed_ball, x1, y1) * ball_poisson(p, closed_ball, x2, y2)
                     / (ball_poisson(p, closed_ball, x1, y2) * ball_poisson(p, closed_ball, x2, y1)))
            zscores.append(abs(rho - exact) / se if se > 0 else (0.0 if rho == exact else math.inf))

    spread = [max(s.lhs, 1.0 / s.lhs) if s.lhs > 0 else math.inf for s in samples]
    worst_index = int(np.argmax(spread))
    worst = samples[worst_index]
    se, se4 = sigmas[worst_index]
    combined = math.hypot(se, se4)
    gap = abs(worst.lhs - worst.rhs) / combined if combined > 0 else (0.0 if worst.lhs == worst.rhs else math.inf)
    details = {"ceiling": BHP_FINITE_CEILING, "stability_gap_sigmas": gap, "walks": walks}
    if zscores:
        details["closed_form_max_sigmas"] = max(zscores)
    return _report("bhp", samples, spread[worst_index], BHP_STABILITY_SIGMAS, STABILITY, details)


# --- Factorization ---

def _factorization_ratios(p, D, y, xs, quad_points, volume, p_cut, walks, cfg, rng, workers):
    origin = np.zeros(p.d)
    far = [z for z in quad_points if np.linalg.norm(z) >= p_cut and contains(D, z)]
    weight = float(levy_density(p, origin, y))
    for index, z in enumerate(far):
        kernel = estimate_poisson_kernel(p, D, z, y, walks, cfg, rng.child(1000 + index), workers)
        weight += volume / len(quad_points) * kernel.mean * float(levy_density(p, origin, z))
    ratios = []
    for index, x in enumerate(xs):
        kernel = estimate_poisson_kernel(p, D, x, y, walks, cfg, rng.child(2 * index), workers)
        exit_time = estimate_exit_time(p, D, x, walks, cfg, rng.child(2 * index + 1), workers)
        ratios.append((kernel.mean, weight * exit_time.mean))
    return weight, ratios


def factorization_audit(p: StableParams, D: DomainSpec, y, p_cut: float, points: int, walks: int,
                        rng: RngStream, workers: int = 1, quad_points: int = 32,
                        cfg: Optional[WalkConfig] = None) -> AuditReport:
    """
    Compare P_D(x, y) with Lambda * s_D(x) for x in D cap B_{p_cut}, where
    Lambda = nu(0, y) + int_{D minus B_p} P_D(z, y) nu(0, z) dz by quasi-Monte-Carlo.
    The worst of sup ratio and sup inverse ratio must stay below the ceiling
    at the given budget and at twice that budget.
    """
    cfg = cfg or WalkConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    ball = bounding_ball(D)
    if ball is None or np.linalg.norm(ball.center_array) + ball.radius > 1.0 + 1e-12:
        raise DomainError("factorization_audit needs a domain inside the unit ball")
    if not np.linalg.norm(y) > 1.0:
        raise DomainError("the charge must lie outside the closed unit ball")
    if not 0.0 < p_cut < 1.0:
        raise DomainError(f"p_cut must lie in (0, 1), got {p_cut}")

    gen = rng.generator()
    origin = tuple(0.0 for _ in range(p.d))
    xs = _draw_points(D, BallSpec(origin, p_cut), points, gen)
    if len(xs) == 0:
        raise DomainError("the domain does not meet B_p")
    sobol = qmc.Sobol(p.d, scramble=True, seed=rng.child(1).seed)
    cube = 2.0 * sobol.random(quad_points) - 1.0
    volume = 2.0 ** p.d

    weight, pairs = _factorization_ratios(p, D, y, xs, cube, volume, p_cut, walks, cfg, rng.child(2), workers)
    _, doubled = _factorization_ratios(p, D, y, xs, cube, volume, p_cut, 2 * walks, cfg, rng.child(3), workers)

    def worst_of(rows):
        values = [k / m for k, m in rows if k > 0 and m > 0]
        if len(values) < len(rows):
            return math.inf, math.inf
        return max(values), max(1.0 / v for v in values)

    upper, lower = worst_of(pairs)
    upper2, lower2 = worst_of(doubled)
    samples = [AuditSample(f"x={format_point(x)}", k, m, k / m if m else math.inf)
               for x, (k, m) in zip(xs, pairs)]
    details = {"lambda": weight, "sup_ratio": upper, "sup_inverse_ratio": lower,
               "reciprocity": upper * lower, "doubled_worst_ratio": max(upper2, lower2)}
    if isinstance(D, Ball):
        exact = [float(ball_poisson(p, D.spec, x, y)) / (weight * float(ball_exit_time(p, D.spec, x)))
                 for x in xs]
        details["closed_form_ratios"] = exact
    return _report("factorization", samples, max(upper, lower), FACTORIZATION_CEILING, MAX_RATIO, details)


# --- Harnack ---

def harnack_bound(d: int, r: float, s: float) -> float:
    q = r / s
    return ((1.0 + q) / (1.0 - q)) ** d


def harnack_audit(p: StableParams, D: DomainSpec, center, r: float, s: float, y, pairs: int, walks: int,
                  rng: RngStream, workers: int = 1, cfg: Optional[WalkConfig] = None) -> AuditReport:
    """
    P_D(x1, y) / P_D(x2, y) against ((1+r/s)/(1-r/s))^d for pairs in B(center, r)
    when B(center, s) lies in D. The audited quantity is (ratio - 3 sigma) / bound.
    """
    cfg = cfg or WalkConfig()
    center = np.asarray(center, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if not 0.0 < r < s:
        raise DomainError(f"harnack_audit needs 0 < r < s, got r={r}, s={s}")
    if not contains(D, center) or dist_lower_bound(D, center).radius < s:
        raise DomainError("cannot certify that B(center, s) lies in the domain")
    if not exterior_distance(D, y) > 0:
        raise DomainError("the charge must be at positive distance from the domain")

    bound = harnack_bound(p.d, r, s)
    gen = rng.generator()
    inner = BallSpec(tuple(center), r)
    points = sample_in_ball(inner, 2 * pairs, gen)
    samples, scores, exact = [], [], []
    for k in range(pairs):
        x1, x2 = points[2 * k], points[2 * k + 1]
        a = estimate_poisson_kernel(p, D, x1, y, walks, cfg, rng.child(2 * k), workers)
        b = estimate_poisson_kernel(p, D, x2, y, walks, cfg, rng.child(2 * k + 1), workers)
        ratio = a.mean / b.mean if b.mean > 0 else math.inf
        sigma = _product_stderr(ratio, (a, b)) if math.isfinite(ratio) else 0.0
        samples.append(AuditSample(f"x1={format_point(x1)};x2={format_point(x2)}", ratio, bound, ratio / bound))
        scores.append((ratio - 3.0 * sigma) / bound)
        if isinstance(D, Ball):
            exact.append(float(ball_poisson(p, D.spec, x1, y)) / float(ball_poisson(p, D.spec, x2, y)))
    details = {"bound": bound}
    if exact:
        details["closed_form_max_ratio"] = max(exact)
    return _report("harnack", samples, max(scores), 1.0, MAX_RATIO, details)


def harnack_pair_audit(p: StableParams, D: DomainSpec, x1, x2, charges: Sequence, walks: int,
                       rng: RngStream, workers: int = 1, cfg: Optional[WalkConfig] = None) -> AuditReport:
    """
    For fixed x1, x2 (possibly in different components of D), the ratio
    P_D(x1, y) / P_D(x2, y) stays bounded over the charges y.
    """
    cfg = cfg or WalkConfig()
    samples, spread = [], []
    for k, y in enumerate(charges):
        y = np.asarray(y, dtype=float).reshape(-1)
        a = estimate_poisson_kernel(p, D, x1, y, walks, cfg, rng.child(2 * k), workers)
        b = estimate_poisson_kernel(p, D, x2, y, walks, cfg, rng.child(2 * k + 1), workers)
        ratio = a.mean / b.mean if a.mean > 0 and b.mean > 0 else math.inf
        samples.append(AuditSample(f"y={format_point(y)}", a.mean, b.mean, ratio))
        spread.append(max(ratio, 1.0 / ratio) if math.isfinite(ratio) else math.inf)
    if not samples:
        raise DomainError("harnack_pair_audit needs at least one charge")
    return _report("harnack-pair", samples, max(spread), BHP_FINITE_CEILING, MAX_RATIO)


# --- Kelvin Identities ---

def _require_invertible(p: StableParams, ball: BallSpec, need_transient: bool):
    if ball.dim != p.d:
        raise DomainError(f"ball lives in R^{ball.dim} but d={p.d}")
    if need_transient and p.alpha >= p.d:
        raise UnsupportedError("Kelvin Green identities need alpha < d")
    if not float(ball.center_array @ ball.center_array) > ball.radius ** 2:
        raise DomainError("0 must lie outside the closed ball")


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def kelvin_green_check(p: StableParams, ball: BallSpec, pairs: int, rng: RngStream,
                       tol: float = KELVIN_GREEN_TOL) -> AuditReport:
    """G_B(x, v) = |x|^{alpha-d} |v|^{alpha-d} G_{TB}(Tx, Tv) on random interior pairs."""
    _require_invertible(p, ball, need_transient=True)
    image = invert_ball(ball)
    gen = rng.generator()
    xs = sample_in_ball(ball, pairs, gen)
    vs = sample_in_ball(ball, pairs, gen)
    samples, round_trip = [], 0.0
    for x, v in zip(xs, vs):
        if np.array_equal(x, v):
            continue
        lhs = float(ball_green(p, ball, x, v))
        tx, tv = invert_point(x), invert_point(v)
        rhs = (np.linalg.norm(x) * np.linalg.norm(v)) ** (p.alpha - p.d) * float(ball_green(p, image, tx, tv))
        samples.append(AuditSample(f"x={format_point(x)};v={format_point(v)}", lhs, rhs, lhs / rhs))
        back = (np.linalg.norm(tx) * np.linalg.norm(tv)) ** (p.alpha - p.d) * lhs
        round_trip = max(round_trip, _relative_gap(back, float(ball_green(p, image, tx, tv))))
    worst = max(_relative_gap(s.lhs, s.rhs) for s in samples)
    details = {"double_inversion_deviation": round_trip,
               "image_ball": {"center": list(image.center), "radius": image.radius}}
    return _report("kelvin-green", samples, worst, tol, MAX_DEVIATION, details)


def _kelvin_exit_time_lhs(p: StableParams, image: BallSpec, tx: np.ndarray, axis: np.ndarray) -> float:
    """int G_{TB}(Tx, y) nu(0, y) dy in polar coordinates around Tx, axisymmetric about `axis`."""
    offset = tx - image.center_array
    gap = float(offset @ offset) - image.radius ** 2

    def radial(direction: np.ndarray) -> float:
        b = float(offset @ direction)
        reach = -b + math.sqrt(b * b - gap)

        def integrand(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            ys = tx + t[:, None] * direction
            green = np.asarray(ball_green(p, image, tx, ys), dtype=float)
            return t ** (p.d - 1) * green * np.asarray(levy_density(p, np.zeros(p.d), ys), dtype=float)

        return adaptive_quad(integrand, 0.0, reach, tol=1e-13).value

    if p.d == 1:
        return radial(np.array([1.0])) + radial(np.array([-1.0]))
    normal = np.zeros(p.d)
    normal[int(np.argmin(np.abs(axis)))] = 1.0
    normal -= (normal @ axis) * axis
    normal /= np.linalg.norm(normal)
    sphere = surface_area(p.d - 1)

    def angular(theta: float) -> float:
        direction = math.cos(theta) * axis + math.sin(theta) * normal
        return sphere * math.sin(theta) ** (p.d - 2) * radial(direction)

    return adaptive_quad(angular, 0.0, math.pi, tol=1e-12).value


def kelvin_exit_time_check(p: StableParams, ball: BallSpec, offsets: Sequence[float] = (-0.5, 0.0, 0.5),
                           tol: float = KELVIN_EXIT_TIME_TOL) -> AuditReport:
    """
    int G_{TB}(Tx, y) nu(0, y) dy = A_{d,-alpha} |x|^{d-alpha} s_B(x) at points
    x = c + t r c/|c| on the line through 0 and the centre, t in `offsets`.
    """
    _require_invertible(p, ball, need_transient=True)
    image = invert_ball(ball)
    axis = ball.center_array / np.linalg.norm(ball.center_array)
    weight = riesz_const(p, -p.alpha)
    samples = []
    for t in offsets:
        if not -1.0 < t < 1.0:
            raise DomainError(f"offset {t} does not give an interior point")
        x = ball.center_array + t * ball.radius * axis
        lhs = _kelvin_exit_time_lhs(p, image, invert_point(x), axis)
        rhs = weight * np.linalg.norm(x) ** (p.d - p.alpha) * float(ball_exit_time(p, ball, x))
        samples.append(AuditSample(f"x={format_point(x)}", lhs, rhs, lhs / rhs if rhs else math.inf))
    worst = max(_relative_gap(s.lhs, s.rhs) for s in samples)
    return _report("kelvin-exit-time", samples, worst, tol, MAX_DEVIATION)


def kelvin_martin_check(p: StableParams, ball: BallSpec, pairs: int, rng: RngStream,
                        tol: float = KELVIN_GREEN_TOL) -> AuditReport:
    """M_B(x, y) = (|x| / |x0|)^{alpha-d} M_{TB}(Tx, Ty) with reference points x0 and Tx0."""
    _require_invertible(p, ball, need_transient=False)
    image = invert_ball(ball)
    gen = rng.generator()
    xs = sample_in_ball(ball, pairs, gen)
    x0 = ball.center_array
    directions = gen.standard_normal((pairs, p.d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    ys = x0 + ball.radius * directions
    samples = []
    for x, y in zip(xs, ys):
        lhs = float(ball_martin_ref(p, ball, x, x0, y))
        scale = (np.linalg.norm(x) / np.linalg.norm(x0)) ** (p.alpha - p.d)
        ty = invert_point(y)
        # Ty sits on the image sphere up to rounding
        ty = image.center_array + image.radius * (ty - image.center_array) / np.linalg.norm(ty - image.center_array)
        rhs = scale * float(ball_martin_ref(p, image, invert_point(x), invert_point(x0), ty))
        samples.append(AuditSample(f"x={format_point(x)};y={format_point(y)}", lhs, rhs, lhs / rhs))
    worst = max(_relative_gap(s.lhs, s.rhs) for s in samples)
    return _report("kelvin-martin", samples, worst, tol, MAX_DEVIATION)


def kelvin_poisson_check(p: StableParams, ball: BallSpec, pairs: int, rng: RngStream,
                         tol: float = KELVIN_GREEN_TOL) -> AuditReport:
    """P_B(x, z) = |x|^{alpha-d} |z|^{-alpha-d} P_{TB}(Tx, Tz) for z off the closed ball."""
    _require_invertible(p, ball, need_transient=False)
    image = invert_ball(ball)
    gen = rng.generator()
    xs = sample_in_ball(ball, pairs, gen)
    directions = gen.standard_normal((pairs, p.d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    zs = ball.center_array + ball.radius * (1.05 + gen.random(pairs))[:, None] * directions
    samples = []
    for x, z in zip(xs, zs):
        if not np.any(z):
            continue
        lhs = float(ball_poisson(p, ball, x, z))
        rhs = (np.linalg.norm(x) ** (p.alpha - p.d) * np.linalg.norm(z) ** (-p.alpha - p.d)
               * float(ball_poisson(p, image, invert_point(x), invert_point(z))))
        samples.append(AuditSample(f"x={format_point(x)};z={format_point(z)}", lhs, rhs, lhs / rhs))
    worst = max(_relative_gap(s.lhs, s.rhs) for s in samples)
    return _report("kelvin-poisson", samples, worst, tol, MAX_DEVIATION)


# --- Far Field And Markov ---

def _sigma_gap(a: MCEstimate, b: MCEstimate) -> float:
    combined = math.hypot(a.stderr, b.stderr)
    if combined == 0:
        return 0.0 if a.mean == b.mean else math.inf
    return abs(a.mean - b.mean) / combined


def far_field_exit_time(p: StableParams, D: DomainSpec, x, z_scale: float, n: int, cfg: WalkConfig,
                        rng: RngStream, workers: int = 1) -> AuditReport:
    """
    s_D(x) is the limit of P_D(x, z) / nu(0, z) as |z| grows. The collision
    estimate at a far target is compared with the direct exit-time estimate.
    """
    ball = bounding_ball(D)
    if ball is None:
        raise UnsupportedError("far_field_exit_time needs a bounded domain")
    x = np.asarray(x, dtype=float).reshape(-1)
    target = ball.center_array.copy()
    target[0] += z_scale * ball.radius
    if not z_scale > 1.0:
        raise DomainError("z_scale must exceed 1 so the target clears the bounding ball")
    kernel = estimate_poisson_kernel(p, D, x, target, n, cfg, rng.child(0), workers)
    weight = float(levy_density(p, np.zeros(p.d), target))
    scaled = MCEstimate(kernel.mean / weight, kernel.stderr / weight, kernel.n, kernel.censored_fraction)
    direct = estimate_exit_time(p, D, x, n, cfg, rng.child(1), workers)
    gap = _sigma_gap(scaled, direct)
    sample = AuditSample(f"x={format_point(x)};z={format_point(target)}", scaled.mean, direct.mean,
                         scaled.mean / direct.mean if direct.mean else math.inf)
    return _report("far-field", [sample], gap, MARKOV_SIGMAS, MAX_DEVIATION,
                   {"far_field_stderr": scaled.stderr, "direct_stderr": direct.stderr})


def markov_audit(p: StableParams, D: DomainSpec, U: DomainSpec, points: Sequence, n: int, cfg: WalkConfig,
                 rng: RngStream, payoff: Optional[Callable] = None, workers: int = 1) -> AuditReport:
    """
    Direct against two-stage (walk in U, restart in D) harmonic expectations
    and exit times at each point; the worst gap is measured in combined sigmas.
    """
    payoff = payoff or ConstantPayoff()
    samples, gaps = [], []
    for k, x in enumerate(points):
        stream = rng.child(k)
        direct = estimate_harmonic_expectation(p, D, x, payoff, n, cfg, stream.child(0), workers)
        staged = estimate_two_stage_expectation(p, D, U, x, payoff, n, cfg, stream.child(1), workers)
        direct_time = estimate_exit_time(p, D, x, n, cfg, stream.child(2), workers)
        staged_time = estimate_two_stage_exit_time(p, D, U, x, n, cfg, stream.child(3), workers)
        label = format_point(np.asarray(x, dtype=float).reshape(-1))
        samples.append(AuditSample(f"harmonic x={label}", direct.mean, staged.mean,
                                   direct.mean / staged.mean if staged.mean else math.inf))
        samples.append(AuditSample(f"exit-time x={label}", direct_time.mean, staged_time.mean,
                                   direct_time.mean / staged_time.mean if staged_time.mean else math.inf))
        gaps.extend([_sigma_gap(direct, staged), _sigma_gap(direct_time, staged_time)])
    if not samples:
        raise DomainError("markov_audit needs at least one point")
    return _report("markov", samples, max(gaps), MARKOV_SIGMAS, MAX_DEVIATION)
