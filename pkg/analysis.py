# FracPot/analysis.py
"""
Accessibility of boundary points and of infinity, and Martin kernel estimates.

A boundary point y is accessible when the integral of s_{D cap B(y,1)}(v) nu(v, y)
over D diverges. Infinity is accessible when the expected exit time is infinite.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm, qmc

from config import (
    INFINITY_BUDGET_LEVELS,
    INFINITY_CENSOR_ACCESSIBLE,
    INFINITY_MAX_STEPS,
    INFINITY_SLOPE_THRESHOLD,
    MARTIN_STABLE_RELATIVE_ERROR,
    SHELL_COUNT,
    SHELL_FINITE_TOL,
    SHELL_POINTS,
    SHELL_WALKS,
)
from geometry import (
    Ball,
    CuspRegion,
    Difference,
    DomainSpec,
    Intersection,
    ThornPower,
    Union,
    bounding_ball,
    contains,
    domain_dim,
    exterior_distance,
    invert_domain,
)
from kernels import StableParams, levy_density, surface_area
from numerics import (
    DIVERGENT,
    FINITE,
    classify_partial_sums,
    divergence_probe,
)
from sampler import MCEstimate, RngStream, WalkConfig, estimate_exit_time, estimate_green
from utils import DomainError, UnsupportedError

logger = logging.getLogger(__name__)

ACCESSIBLE = "accessible"
INACCESSIBLE = "inaccessible"
UNDETERMINED = "undetermined"

INFINITY_POINT = "infinity"


@dataclass(frozen=True)
class Classification:
    verdict: str
    evidence: Any
    boundary_point: Any
    value: Optional[float] = None

    def to_dict(self) -> dict:
        evidence = self.evidence.to_dict() if hasattr(self.evidence, "to_dict") else self.evidence
        point = self.boundary_point
        if not isinstance(point, str):
            point = [float(c) for c in point]
        return {"verdict": self.verdict, "boundary_point": point, "value": self.value,
                "evidence": evidence}


def _verdict_from_kind(kind: str) -> str:
    if kind == DIVERGENT:
        return ACCESSIBLE
    if kind == FINITE:
        return INACCESSIBLE
    return UNDETERMINED


# --- Thorn And Cusp Tests ---

def _thorn_integrand(p: StableParams, profile: Callable) -> Callable:
    m = p.d + p.alpha - 1.0

    def integrand(t):
        t = np.asarray(t, dtype=float)
        return t ** (-p.d - p.alpha) * np.asarray(profile(t), dtype=float) ** m

    return integrand


def thorn_integral_test(p: StableParams, gamma: float, width_scale: float = 1.0) -> Classification:
    """
    Apex of the thorn with profile width_scale * t^gamma: inaccessible iff gamma > 1.

    The verdict is analytic; the numeric partial sums of the same integral are kept as evidence.
    """
    if not gamma > 0 or not width_scale > 0:
        raise DomainError(f"thorn test needs gamma > 0 and width_scale > 0, got {gamma}, {width_scale}")
    m = p.d + p.alpha - 1.0
    evidence = divergence_probe(_thorn_integrand(p, lambda t: width_scale * t ** gamma), 1.0)
    if gamma > 1.0:
        value = width_scale ** m / (m * (gamma - 1.0))
        verdict = INACCESSIBLE
    else:
        value = None
        verdict = ACCESSIBLE
    if evidence.kind != FINITE and verdict == INACCESSIBLE or evidence.kind == FINITE and verdict == ACCESSIBLE:
        logger.info(f"thorn partial sums ({evidence.kind}) disagree with the exact verdict at gamma={gamma}")
    origin = tuple(0.0 for _ in range(p.d))
    return Classification(verdict, evidence, origin, value)


def thorn_profile_test(p: StableParams, profile: Callable, upper: float = 1.0) -> Classification:
    """Numeric accessibility test for a thorn with a general increasing profile."""
    evidence = divergence_probe(_thorn_integrand(p, profile), upper)
    origin = tuple(0.0 for _ in range(p.d))
    return Classification(_verdict_from_kind(evidence.kind), evidence, origin, evidence.value)


def cusp_test(p: StableParams, gamma: float) -> Classification:
    """The cusp {y > |x|^gamma} at 0 is a thorn of exponent 1/gamma."""
    if p.d != 2:
        raise UnsupportedError("cusp regions live in the plane")
    if not gamma > 0:
        raise DomainError(f"cusp gamma must be positive, got {gamma}")
    return thorn_integral_test(p, 1.0 / gamma)


# --- Boundary Point Classification ---

def _shell_points(d: int, inner: float, outer: float, count: int, seed: int) -> Tuple[np.ndarray, float]:
    """Low-discrepancy points uniform in the annulus inner <= |v| < outer, and its volume."""
    sobol = qmc.Sobol(d + 1, scramble=True, seed=seed)
    u = np.clip(sobol.random(count), 1e-12, 1.0 - 1e-12)
    radii = (inner ** d + u[:, 0] * (outer ** d - inner ** d)) ** (1.0 / d)
    if d == 1:
        directions = np.where(u[:, 1:] < 0.5, -1.0, 1.0)
    else:
        directions = norm.ppf(u[:, 1:])
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    volume = surface_area(d) / d * (outer ** d - inner ** d)
    return directions * radii[:, None], volume


def _local_apex(D: DomainSpec, y: np.ndarray):
    """
    The thorn or cusp that coincides with D near y when y is its apex, else None.

    Other children must leave a neighbourhood of y untouched: an intersection
    partner has to contain y, a union partner or a subtracted set has to stay
    at positive distance from it.
    """
    if isinstance(D, (ThornPower, CuspRegion)):
        return D if not np.any(y) else None
    if isinstance(D, Difference):
        leaf = _local_apex(D.left, y)
        return leaf if leaf is not None and _certified_gap(D.right, y) > 0 else None
    if isinstance(D, (Intersection, Union)):
        found = [(child, _local_apex(child, y)) for child in D.children]
        leaves = [leaf for _, leaf in found if leaf is not None]
        others = [child for child, leaf in found if leaf is None]
        if len(leaves) != 1:
            return None
        if isinstance(D, Intersection):
            local = all(contains(child, y) for child in others)
        else:
            local = all(_certified_gap(child, y) > 0 for child in others)
        return leaves[0] if local else None
    return None


def _certified_gap(D: DomainSpec, y: np.ndarray) -> float:
    try:
        return float(exterior_distance(D, y))
    except UnsupportedError:
        return 0.0


def classify_boundary_point(p: StableParams, D: DomainSpec, y, rng: RngStream,
                            budget: int = SHELL_WALKS, shells: int = SHELL_COUNT,
                            points_per_shell: int = SHELL_POINTS, workers: int = 1,
                            cfg: Optional[WalkConfig] = None) -> Classification:
    """
    Estimate the accessibility integral around y shell by shell.

    Shell k holds 2^{-k-1} <= |v - y| < 2^{-k}; its contribution is a
    quasi-Monte-Carlo average of s(v) nu(v, y) with s estimated by
    `budget` walks per point in D cap B(y, 1). The apex of a thorn or cusp,
    alone or as the only relevant part of a composite near y, gets the
    exact test instead. Fewer than 4 shells with points in D give an
    undetermined verdict.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if domain_dim(D) != p.d or len(y) != p.d:
        raise DomainError(f"dimension mismatch between d={p.d}, domain and point {y.tolist()}")
    if contains(D, y):
        raise DomainError(f"{y.tolist()} lies inside the domain, not on its boundary")
    gap = _certified_gap(D, y)
    if gap > 0:
        raise DomainError(f"{y.tolist()} is not a limit point of the domain (distance at least {gap:.6g})")
    leaf = _local_apex(D, y)
    if isinstance(leaf, ThornPower):
        result = thorn_integral_test(p, leaf.gamma, leaf.width_scale)
        return Classification(result.verdict, result.evidence, tuple(y), result.value)
    if isinstance(leaf, CuspRegion):
        result = cusp_test(p, leaf.gamma)
        return Classification(result.verdict, result.evidence, tuple(y), result.value)

    cfg = cfg or WalkConfig()
    local = Intersection((D, Ball(tuple(y), 1.0)))
    cutoffs, partials, hits = [], [], []
    running = 0.0
    for k in range(shells):
        inner, outer = 2.0 ** (-k - 1), 2.0 ** (-k)
        offsets, volume = _shell_points(p.d, inner, outer, points_per_shell, seed=rng.child(k).seed)
        samples = y + offsets
        inside = np.asarray(contains(D, samples))
        total = 0.0
        for j in np.flatnonzero(inside):
            estimate = estimate_exit_time(p, local, samples[j], budget, cfg,
                                          rng.child(k).child(int(j)), workers)
            total += estimate.mean * float(levy_density(p, samples[j], y))
        running += volume * total / points_per_shell
        cutoffs.append(inner)
        partials.append(running)
        hits.append(int(inside.sum()))
        logger.info(f"shell {k}: {hits[-1]}/{points_per_shell} points in D, running sum {running:.6g}")
    if not any(hits):
        raise DomainError(f"no shell around {y.tolist()} meets the domain; not a limit point")

    usable = sum(1 for count in hits if count > 0)
    if usable < 4:
        logger.warning(f"only {usable} of {shells} shells met the domain; verdict undetermined")
        evidence = {"shell_hits": hits, "cutoffs": cutoffs, "partials": partials}
        return Classification(UNDETERMINED, evidence, tuple(y), None)
    evidence = classify_partial_sums(cutoffs, partials, 1.0, tol=SHELL_FINITE_TOL)
    return Classification(_verdict_from_kind(evidence.kind), evidence, tuple(y), evidence.value)


# --- Infinity ---

def classify_infinity(p: StableParams, D: DomainSpec, x_probe, rng: RngStream,
                      budget: int = 1000, levels: int = INFINITY_BUDGET_LEVELS, workers: int = 1,
                      cross_check: bool = False, shell_budget: int = SHELL_WALKS) -> Classification:
    """
    Decide whether s_D is infinite by watching the exit-time estimate as the
    walk budget doubles. With `cross_check`, also classify 0 for the inverted
    domain when it is representable.
    """
    if bounding_ball(D) is not None:
        raise DomainError("classify_infinity needs an unbounded domain")
    x = np.asarray(x_probe, dtype=float).reshape(-1)
    if not contains(D, x):
        raise DomainError(f"point {x.tolist()} is not in the domain")

    cfg = WalkConfig(max_steps=INFINITY_MAX_STEPS)
    trace = []
    for level in range(levels):
        n = budget * 2 ** level
        estimate = estimate_exit_time(p, D, x, n, cfg, rng.child(level), workers)
        trace.append({"walks": n, **estimate.to_dict()})
        logger.info(f"infinity level {level}: n={n}, mean={estimate.mean:.6g}, "
                    f"censored={estimate.censored_fraction:.3g}")

    evidence = {"levels": trace}
    censored = max(entry["censored_fraction"] for entry in trace)
    means = np.array([entry["mean"] for entry in trace])
    counts = np.array([entry["walks"] for entry in trace], dtype=float)
    usable = bool(np.all(np.isfinite(means) & (means > 0)))
    slope = float(np.polyfit(np.log(counts), np.log(means), 1)[0]) if usable else math.nan
    evidence["growth_slope"] = slope

    last, previous = trace[-1], trace[-2] if len(trace) > 1 else trace[-1]
    gap = abs(last["mean"] - previous["mean"])
    spread = 3.0 * math.hypot(last["stderr"], previous["stderr"])
    if censored > INFINITY_CENSOR_ACCESSIBLE or (math.isfinite(slope) and slope > INFINITY_SLOPE_THRESHOLD):
        verdict, value = ACCESSIBLE, None
    elif len(trace) > 1 and gap <= spread:
        verdict, value = INACCESSIBLE, float(last["mean"])
    else:
        verdict, value = UNDETERMINED, None

    if cross_check:
        try:
            inverted = invert_domain(D)
        except UnsupportedError as e:
            evidence["inversion"] = {"skipped": str(e)}
        else:
            origin = np.zeros(p.d)
            mirrored = classify_boundary_point(p, inverted, origin, rng.child(levels), budget=shell_budget,
                                               workers=workers)
            evidence["inversion"] = mirrored.to_dict()
            evidence["inversion_agrees"] = mirrored.verdict == verdict
            if mirrored.verdict != verdict:
                logger.warning(f"inversion cross-check says {mirrored.verdict}, direct estimate says {verdict}")
    return Classification(verdict, evidence, INFINITY_POINT, value)


# --- Martin Kernel ---

@dataclass(frozen=True)
class MartinLevel:
    radius: float
    ratio: MCEstimate


@dataclass(frozen=True)
class MartinResult:
    levels: Tuple[MartinLevel, ...]
    extrapolated: MCEstimate
    stable: bool
    skipped: Tuple[float, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "levels": [{"radius": level.radius, **level.ratio.to_dict()} for level in self.levels],
            "extrapolated": self.extrapolated.to_dict(),
            "stable": self.stable,
            "skipped": list(self.skipped),
        }


def _ratio_estimate(top: MCEstimate, bottom: MCEstimate, same_walks: bool) -> MCEstimate:
    ratio = top.mean / bottom.mean
    if same_walks:
        stderr = 0.0
    else:
        stderr = abs(ratio) * math.hypot(top.stderr / top.mean if top.mean else 0.0,
                                         bottom.stderr / bottom.mean)
    notes = top.warnings + bottom.warnings
    return MCEstimate(ratio, stderr, min(top.n, bottom.n),
                      max(top.censored_fraction, bottom.censored_fraction),
                      top.healthy and bottom.healthy, notes)


def estimate_martin_kernel(p: StableParams, D: DomainSpec, x, x0, y, radii: Sequence[float], n: int,
                           cfg: WalkConfig, rng: RngStream, workers: int = 1,
                           direction=None) -> MartinResult:
    """
    Ratios G_D(x, v_j) / G_D(x0, v_j) along v_j = y + radii_j * direction.

    The direction defaults to the unit vector from y towards the centre of
    the bounding ball. The two Green estimates of a level use independent
    streams, so their errors combine without a covariance term; x == x0
    reuses one estimate and gives ratio 1 exactly. The extrapolated value is the
    finest level whose relative error is below 5%.
    """
    ball = bounding_ball(D)
    if ball is None:
        raise UnsupportedError("Martin kernel estimates need a bounded domain")
    x = np.asarray(x, dtype=float).reshape(-1)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise DomainError("Martin radii must be positive and strictly decreasing")
    for name, point in (("x", x), ("x0", x0)):
        if not contains(D, point):
            raise DomainError(f"{name}={point.tolist()} is not in the domain")

    if direction is None:
        direction = ball.center_array - y
        if not np.any(direction):
            direction = x0 - y
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)

    same = np.array_equal(x, x0)
    levels: List[MartinLevel] = []
    skipped: List[float] = []
    for j, radius in enumerate(radii):
        v = y + radius * direction
        if not contains(D, v) or np.array_equal(v, x) or np.array_equal(v, x0):
            logger.warning(f"Martin level r={radius}: sample point {v.tolist()} unusable, skipped")
            skipped.append(radius)
            continue
        stream = rng.child(j)
        top = estimate_green(p, D, x, v, n, cfg, stream.child(0), workers)
        bottom = top if same else estimate_green(p, D, x0, v, n, cfg, stream.child(1), workers)
        if not bottom.mean > 0:
            logger.warning(f"Martin level r={radius}: reference Green estimate {bottom.mean} not positive, skipped")
            skipped.append(radius)
            continue
        levels.append(MartinLevel(radius, _ratio_estimate(top, bottom, same)))
    if not levels:
        raise DomainError("every Martin level was skipped")

    stable_levels = [level for level in levels
                     if level.ratio.stderr <= MARTIN_STABLE_RELATIVE_ERROR * abs(level.ratio.mean)]
    if stable_levels:
        chosen, stable = stable_levels[-1], True
    else:
        chosen, stable = levels[-1], False
        logger.warning("no Martin level reached the relative error target; reporting the finest level")
    return MartinResult(tuple(levels), chosen.ratio, stable, tuple(skipped))
