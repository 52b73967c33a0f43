# FracPot/sampler.py
"""
Walk-on-spheres for the isotropic alpha-stable process.

From x_k the walk jumps straight out of the largest certified ball B(x_k, r_k)
using the exact ball-exit law, so the first point outside D is an exact draw
of the harmonic measure. Walk i of an estimate always draws from the stream
rng.child(i); results do not depend on the worker count.
"""

import logging
import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Callable, List, Optional, Sequence, Tuple, Union as TypingUnion

import numpy as np

from config import (
    CENSORED_CEILING,
    GREEN_VARIANCE_WARNING,
    INFINITY_SLOPE_THRESHOLD,
    WALK_CHUNK_SIZE,
    WALK_MAX_STEPS,
    WALK_MIN_RADIUS,
    WALK_SHRINK,
)
from geometry import (
    DomainSpec,
    bounding_ball,
    contains,
    domain_dim,
    exterior_distance,
    inradius_bounds,
    project_to_boundary,
)
from kernels import (
    BallSpec,
    StableParams,
    ball_green,
    ball_poisson,
    exit_time_const,
    levy_density,
)
from utils import DomainError, UnsupportedError

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1

# --- Random Streams ---

def _mix(seed: int, stream_index: int) -> int:
    state = np.random.SeedSequence([seed & _MASK64, stream_index & _MASK64]).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class RngStream:
    """A counter-based stream: (seed, stream_index) is the 128-bit Philox key."""
    seed: int
    stream_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_index", int(self.stream_index) & _MASK64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=(self.stream_index << 64) | self.seed))

    def child(self, index: int) -> "RngStream":
        """Independent substream; children of different streams never share a key."""
        return RngStream(_mix(self.seed, self.stream_index), index)

    def child_generators(self, first: int, stop: int) -> List[np.random.Generator]:
        """Generators of child(first) .. child(stop - 1), mixing the parent key once."""
        mixed = _mix(self.seed, self.stream_index)
        return [RngStream(mixed, index).generator() for index in range(first, stop)]


RngLike = TypingUnion[RngStream, np.random.Generator]


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


# --- Walk Types ---

@dataclass(frozen=True)
class WalkConfig:
    shrink: float = WALK_SHRINK
    max_steps: int = WALK_MAX_STEPS
    min_radius: float = WALK_MIN_RADIUS

    def __post_init__(self):
        if not 0.0 < self.shrink <= 1.0:
            raise DomainError(f"shrink must lie in (0, 1], got {self.shrink}")
        if self.max_steps < 1:
            raise DomainError(f"max_steps must be positive, got {self.max_steps}")
        if not self.min_radius > 0:
            raise DomainError(f"min_radius must be positive, got {self.min_radius}")


@dataclass
class WalkOutcome:
    """One walk. exit_point is None for censored walks; last_point is the last interior point."""
    exit_point: Optional[np.ndarray]
    steps: int
    exit_time_sum: float
    censored: bool
    last_point: np.ndarray
    collision_score: float = 0.0


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int
    censored_fraction: float
    healthy: bool = True
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "n": self.n,
            "censored_fraction": self.censored_fraction,
            "healthy": self.healthy,
            "warnings": list(self.warnings),
        }


# --- Payoffs ---
# Payoffs take a stack of exit points (n, d) and return n values.

@dataclass(frozen=True)
class ConstantPayoff:
    value: float = 1.0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.full(len(points), float(self.value))


@dataclass(frozen=True)
class IndicatorPayoff:
    region: DomainSpec

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(contains(self.region, points), dtype=float)


@dataclass(frozen=True)
class LevyWeightPayoff:
    """y -> nu(y0, y), the jump intensity towards a fixed point y0."""
    params: StableParams
    y0: Tuple[float, ...]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(levy_density(self.params, np.asarray(self.y0), points), dtype=float)


@dataclass(frozen=True)
class CoordinatePayoff:
    index: int

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return points[:, self.index].astype(float)


def _apply_payoff(payoff: Callable, points: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(payoff(points), dtype=float)
        if values.shape == (len(points),):
            return values
    except (TypeError, ValueError, IndexError):
        pass
    return np.array([float(payoff(point)) for point in points])


# --- Ball Exit Sampling ---

def sample_unit_sphere(p: StableParams, rng: RngLike, size: Optional[int] = None) -> np.ndarray:
    """Uniform direction(s) on the unit sphere of R^d."""
    gen = _as_generator(rng)
    shape = (1 if size is None else size, p.d)
    if p.d == 1:
        u = np.where(gen.random(shape) < 0.5, -1.0, 1.0)
    else:
        u = gen.standard_normal(shape)
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u[0] if size is None else u


def _log_gamma_variate(gen: np.random.Generator, shape: float, size) -> np.ndarray:
    # G_a = G_{a+1} U^{1/a}, kept in logs so tiny shapes do not underflow to 0
    return np.log(gen.standard_gamma(shape + 1.0, size)) + np.log(gen.random(size)) / shape


def sample_ball_exit_radius(p: StableParams, rng: RngLike, size: Optional[int] = None):
    """
    Distance, in units of the radius, at which the process started at the
    centre of a ball first lands outside it: R = V^{-1/2}, V ~ Beta(alpha/2, 1 - alpha/2).
    """
    gen = _as_generator(rng)
    n = 1 if size is None else size
    log_a = _log_gamma_variate(gen, p.alpha / 2.0, n)
    log_b = _log_gamma_variate(gen, 1.0 - p.alpha / 2.0, n)
    # R^2 = (G_a + G_b) / G_a
    radius = np.sqrt(1.0 + np.exp(np.minimum(log_b - log_a, 700.0)))
    radius = np.maximum(radius, np.nextafter(1.0, 2.0))
    return float(radius[0]) if size is None else radius


def sample_ball_exit(p: StableParams, ball: BallSpec, rng: RngLike, size: Optional[int] = None):
    """Exit position(s) of the process started at the centre of `ball`."""
    if ball.dim != p.d:
        raise DomainError(f"ball lives in R^{ball.dim} but d={p.d}")
    gen = _as_generator(rng)
    n = 1 if size is None else size
    radii = sample_ball_exit_radius(p, gen, n)
    directions = sample_unit_sphere(p, gen, n)
    points = ball.center_array + ball.radius * radii[:, None] * directions
    return points[0] if size is None else points


# --- Walk Engine ---
# Every live walk of a chunk steps together. Walk i only ever draws from its
# own generator, in blocks of _DRAW_BLOCK unit jumps, so the chunking and the
# worker count never change what a walk sees.

_DRAW_BLOCK = 16


class _JumpDraws:
    """Per-walk blocks of ball-exit jumps from the centre of the unit ball."""

    def __init__(self, p: StableParams, generators: Sequence[np.random.Generator]):
        self.params = p
        self.generators = list(generators)
        self.unit = BallSpec(tuple(0.0 for _ in range(p.d)), 1.0)
        self.jumps = np.empty((len(self.generators), _DRAW_BLOCK, p.d))
        self.cursor = np.full(len(self.generators), _DRAW_BLOCK)

    def take(self, rows: np.ndarray) -> np.ndarray:
        for row in rows[self.cursor[rows] >= _DRAW_BLOCK]:
            self.jumps[row] = sample_ball_exit(self.params, self.unit, self.generators[row], _DRAW_BLOCK)
            self.cursor[row] = 0
        jumps = self.jumps[rows, self.cursor[rows]]
        self.cursor[rows] += 1
        return jumps


@dataclass
class _StageResult:
    exit_points: np.ndarray
    last_points: np.ndarray
    exit_time: np.ndarray
    collision: np.ndarray
    censored: np.ndarray
    steps: np.ndarray


def _centre_poisson(p: StableParams, unit: BallSpec, radius: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    # P_{B(c,r)}(c, y) = r^{-d} P_{B(0,1)}(0, (y - c) / r)
    scaled = offsets / radius[:, None]
    return np.asarray(ball_poisson(p, unit, unit.center_array, scaled), dtype=float) * radius ** (-p.d)


def _walk_stage(p: StableParams, D: DomainSpec, start: np.ndarray, rows: np.ndarray, draws: _JumpDraws,
                cfg: WalkConfig, target: Optional[np.ndarray] = None) -> _StageResult:
    """Walk each row of `start` out of D; row k draws from walk rows[k]."""
    m = len(start)
    point = np.array(start, dtype=float)
    exit_points = np.full_like(point, math.nan)
    exit_time = np.zeros(m)
    collision = np.zeros(m)
    censored = np.zeros(m, dtype=bool)
    steps = np.zeros(m, dtype=np.int64)
    ball_time = exit_time_const(p)

    live = np.arange(m)
    while live.size:
        radius = cfg.shrink * inradius_bounds(D, point[live])
        stuck = (steps[live] >= cfg.max_steps) | ~np.isfinite(radius) | (radius < cfg.min_radius)
        censored[live[stuck]] = True
        live, radius = live[~stuck], radius[~stuck]
        if not live.size:
            break
        exit_time[live] += ball_time * radius ** p.alpha
        if target is not None:
            collision[live] += _centre_poisson(p, draws.unit, radius, target - point[live])
        landing = point[live] + radius[:, None] * draws.take(rows[live])
        steps[live] += 1
        left = ~np.asarray(contains(D, landing), dtype=bool)
        exit_points[live[left]] = landing[left]
        point[live[~left]] = landing[~left]
        live = live[~left]
    return _StageResult(exit_points, point, exit_time, collision, censored, steps)


# --- Single Walk ---

def run_walk(p: StableParams, D: DomainSpec, x, cfg: WalkConfig, rng: RngLike,
             collision_target=None) -> WalkOutcome:
    """
    Walk from x until the first landing outside D.

    With `collision_target` set, collision_score sums the one-jump densities
    ball_poisson(B(x_k, r_k), x_k, target) along the walk.
    """
    point = np.asarray(x, dtype=float).reshape(-1)
    if len(point) != p.d or domain_dim(D) != p.d:
        raise DomainError(f"walk dimension mismatch: point {len(point)}, domain {domain_dim(D)}, d={p.d}")
    if not contains(D, point):
        raise DomainError(f"walk start {point.tolist()} is not in the domain")
    target = None if collision_target is None else np.asarray(collision_target, dtype=float).reshape(-1)
    draws = _JumpDraws(p, [_as_generator(rng)])
    result = _walk_stage(p, D, point[None, :], np.array([0]), draws, cfg, target)
    censored = bool(result.censored[0])
    return WalkOutcome(None if censored else result.exit_points[0], int(result.steps[0]),
                       float(result.exit_time[0]), censored, result.last_points[0],
                       float(result.collision[0]))


# --- Walk Batches ---

@dataclass(frozen=True)
class _WalkJob:
    params: StableParams
    domains: Tuple[DomainSpec, ...]
    start: Tuple[float, ...]
    cfg: WalkConfig
    rng: RngStream
    first: int
    stop: int
    target: Optional[Tuple[float, ...]] = None


@dataclass
class _WalkBatch:
    exit_points: np.ndarray
    exit_time: np.ndarray
    collision: np.ndarray
    censored: np.ndarray
    steps: np.ndarray


def _run_job(job: _WalkJob) -> _WalkBatch:
    """Walks job.first..job.stop-1; later domains restart from an exit that lands inside them."""
    count = job.stop - job.first
    target = None if job.target is None else np.asarray(job.target, dtype=float)
    draws = _JumpDraws(job.params, job.rng.child_generators(job.first, job.stop))
    point = np.tile(np.asarray(job.start, dtype=float), (count, 1))
    exit_time = np.zeros(count)
    collision = np.zeros(count)
    censored = np.zeros(count, dtype=bool)
    steps = np.zeros(count, dtype=np.int64)
    rows = np.arange(count)
    for stage, domain in enumerate(job.domains):
        if stage > 0:
            rows = rows[np.asarray(contains(domain, point[rows]), dtype=bool)]
        if not rows.size:
            break
        result = _walk_stage(job.params, domain, point[rows], rows, draws, job.cfg, target)
        exit_time[rows] += result.exit_time
        collision[rows] += result.collision
        steps[rows] += result.steps
        for k in np.flatnonzero(result.censored):
            censored[rows[k]] = True
            point[rows[k]] = project_to_boundary(domain, result.last_points[k])
        done = ~result.censored
        point[rows[done]] = result.exit_points[done]
        rows = rows[done]
    return _WalkBatch(point, exit_time, collision, censored, steps)


def _run_walks(p: StableParams, domains: Sequence[DomainSpec], x, n: int, cfg: WalkConfig,
               rng: RngStream, workers: int = 1, target=None) -> _WalkBatch:
    if n < 1:
        raise DomainError(f"walk count must be positive, got {n}")
    if not isinstance(rng, RngStream):
        raise DomainError("estimators need an RngStream so that walks can be split")
    start = np.asarray(x, dtype=float).reshape(-1)
    for domain in domains[:1]:
        if not contains(domain, start):
            raise DomainError(f"start point {start.tolist()} is not in the domain")
    jobs = [
        _WalkJob(p, tuple(domains), tuple(start), cfg, rng, first, min(first + WALK_CHUNK_SIZE, n),
                 None if target is None else tuple(float(c) for c in target))
        for first in range(0, n, WALK_CHUNK_SIZE)
    ]
    if workers <= 1 or len(jobs) == 1:
        batches = [_run_job(job) for job in jobs]
    else:
        with Pool(processes=min(workers, len(jobs))) as pool:
            batches = pool.map(_run_job, jobs)
    merged = _WalkBatch(
        np.concatenate([b.exit_points for b in batches]),
        np.concatenate([b.exit_time for b in batches]),
        np.concatenate([b.collision for b in batches]),
        np.concatenate([b.censored for b in batches]),
        np.concatenate([b.steps for b in batches]),
    )
    logger.info(f"Ran {n} walks in {len(jobs)} chunk(s); mean steps {merged.steps.mean():.2f}, "
                f"censored {int(merged.censored.sum())}")
    return merged


def _summarize(values: np.ndarray, censored: np.ndarray, warnings: Sequence[str] = ()) -> MCEstimate:
    n = len(values)
    # np.sum reduces pairwise in a fixed order
    mean = float(np.sum(values) / n)
    stderr = float(np.sqrt(np.sum((values - mean) ** 2) / (n - 1)) / math.sqrt(n)) if n > 1 else 0.0
    censored_fraction = float(np.count_nonzero(censored)) / n
    notes = list(warnings)
    if censored_fraction > CENSORED_CEILING:
        notes.append(f"censored fraction {censored_fraction:.3g} exceeds {CENSORED_CEILING:g}")
    for note in notes:
        logger.warning(note)
    return MCEstimate(mean, stderr, n, censored_fraction,
                      healthy=censored_fraction <= CENSORED_CEILING and not warnings,
                      warnings=tuple(notes))


# --- Estimators ---

def sample_exit_points(p: StableParams, D: DomainSpec, x, n: int, cfg: WalkConfig,
                       rng: RngStream, workers: int = 1) -> np.ndarray:
    """n exit positions from D; censored walks contribute their boundary projection."""
    batch = _run_walks(p, [D], x, n, cfg, rng, workers)
    if batch.censored.any():
        logger.warning(f"{int(batch.censored.sum())} of {n} exit samples were censored")
    return batch.exit_points


def estimate_harmonic_expectation(p: StableParams, D: DomainSpec, x, payoff: Callable, n: int,
                                  cfg: WalkConfig, rng: RngStream, workers: int = 1) -> MCEstimate:
    """E^x g(X at the exit from D)."""
    batch = _run_walks(p, [D], x, n, cfg, rng, workers)
    return _summarize(_apply_payoff(payoff, batch.exit_points), batch.censored)


def _infinite_mean_warning(values: np.ndarray) -> List[str]:
    # running means of an infinite-mean sample keep growing with the sample size
    n = len(values)
    if n < 16:
        return []
    counts = np.array([n // 4, n // 2, n])
    means = np.array([np.sum(values[:k]) / k for k in counts])
    if np.any(means <= 0):
        return []
    slope = float(np.polyfit(np.log(counts), np.log(means), 1)[0])
    if slope > INFINITY_SLOPE_THRESHOLD:
        return [f"exit time possibly infinite: running mean grows like n^{slope:.2f}"]
    return []


def estimate_exit_time(p: StableParams, D: DomainSpec, x, n: int, cfg: WalkConfig,
                       rng: RngStream, workers: int = 1) -> MCEstimate:
    """Expected exit time s_D(x), from the summed ball exit times along each walk."""
    batch = _run_walks(p, [D], x, n, cfg, rng, workers)
    warnings = []
    if bounding_ball(D) is None and p.alpha >= p.d:
        warnings = _infinite_mean_warning(batch.exit_time)
    return _summarize(batch.exit_time, batch.censored, warnings)


def estimate_two_stage_expectation(p: StableParams, D: DomainSpec, U: DomainSpec, x, payoff: Callable,
                                   n: int, cfg: WalkConfig, rng: RngStream, workers: int = 1) -> MCEstimate:
    """The harmonic expectation on D, walking first in U subset D and restarting from the U-exit."""
    if not contains(D, x):
        raise DomainError("two-stage start point is not in the outer domain")
    batch = _run_walks(p, [U, D], x, n, cfg, rng, workers)
    return _summarize(_apply_payoff(payoff, batch.exit_points), batch.censored)


def estimate_two_stage_exit_time(p: StableParams, D: DomainSpec, U: DomainSpec, x, n: int,
                                 cfg: WalkConfig, rng: RngStream, workers: int = 1) -> MCEstimate:
    """s_D(x) = s_U(x) + E^x s_D(exit from U), sampled stage by stage."""
    if not contains(D, x):
        raise DomainError("two-stage start point is not in the outer domain")
    batch = _run_walks(p, [U, D], x, n, cfg, rng, workers)
    return _summarize(batch.exit_time, batch.censored)


def estimate_poisson_kernel(p: StableParams, D: DomainSpec, x, y, n: int, cfg: WalkConfig,
                            rng: RngStream, workers: int = 1) -> MCEstimate:
    """Collision estimate of the Poisson kernel P_D(x, y) at a point y away from D."""
    y = np.asarray(y, dtype=float).reshape(-1)
    gap = exterior_distance(D, y)
    if not gap > 0:
        raise DomainError(f"cannot certify that {y.tolist()} is at positive distance from the domain")
    batch = _run_walks(p, [D], x, n, cfg, rng, workers, target=y)
    return _summarize(batch.collision, batch.censored)


def estimate_green(p: StableParams, D: DomainSpec, x, v, n: int, cfg: WalkConfig,
                   rng: RngStream, workers: int = 1) -> MCEstimate:
    """G_D(x, v) = G_B(x, v) - E^x G_B(exit, v) for a ball B containing D."""
    ball = bounding_ball(D)
    if ball is None:
        raise UnsupportedError("Green function estimates need a bounded domain")
    x = np.asarray(x, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if not contains(D, v):
        raise DomainError(f"pole {v.tolist()} is not in the domain")
    if np.array_equal(x, v):
        raise DomainError("estimate_green needs x != v")
    batch = _run_walks(p, [D], x, n, cfg, rng, workers)
    head = float(ball_green(p, ball, x, v))
    corrections = np.asarray(ball_green(p, ball, batch.exit_points, v), dtype=float)
    estimate = _summarize(head - corrections, batch.censored)
    if estimate.mean != 0 and estimate.stderr / abs(estimate.mean) > GREEN_VARIANCE_WARNING:
        note = f"high-variance Green estimate: stderr/mean = {estimate.stderr / abs(estimate.mean):.3g}"
        logger.warning(note)
        return MCEstimate(estimate.mean, estimate.stderr, estimate.n, estimate.censored_fraction,
                          False, estimate.warnings + (note,))
    return estimate
