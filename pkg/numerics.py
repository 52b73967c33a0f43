# FracPot/numerics.py

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from config import (
    DIVERGENCE_DEFAULT_DEPTH,
    DIVERGENCE_FINITE_TOL,
    DIVERGENCE_MIN_CUTOFFS,
    DIVERGENCE_RATIO_THRESHOLD,
    QUAD_DEFAULT_TOL,
    QUAD_MAX_PANELS,
)
from utils import DomainError

logger = logging.getLogger(__name__)

# --- Result Types ---

@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    subdivisions: int
    converged: bool = True


FINITE = "finite"
DIVERGENT = "divergent"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class DivergenceVerdict:
    """Outcome of probing an integral that may diverge at its lower end.

    `value` is set for finite verdicts, `growth_exponent_estimate` for
    divergent ones. `probe_values` holds (cutoff, partial integral) pairs
    with decreasing cutoffs.
    """
    kind: str
    probe_values: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)
    value: Optional[float] = None
    growth_exponent_estimate: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "growth_exponent_estimate": self.growth_exponent_estimate,
            "probe_values": [list(pair) for pair in self.probe_values],
        }


# --- Special Functions ---

def ln_gamma(x):
    """Natural log of the gamma function for positive arguments."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"ln_gamma needs x > 0, got {x}")
    result = special.gammaln(arr)
    return float(result) if result.ndim == 0 else result


def reg_inc_beta(x, a: float, b: float):
    """Regularized incomplete beta I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"reg_inc_beta needs a, b > 0, got a={a}, b={b}")
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"reg_inc_beta needs 0 <= x <= 1, got {x}")
    result = special.betainc(a, b, arr)
    return float(result) if result.ndim == 0 else result


# --- Adaptive Gauss-Kronrod Quadrature ---

# 15-point Kronrod nodes on [0, 1) of the reference interval; the 7-point
# Gauss rule reuses every odd-indexed node
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes sit at Kronrod indices 1, 3, 5 on each side plus the centre
_GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
_GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
_GAUSS_WEIGHTS[7] = _WG[3]


def _evaluate(f: Callable, points: np.ndarray) -> np.ndarray:
    """Evaluate f on an array of nodes, falling back to a loop for scalar-only f."""
    try:
        values = np.asarray(f(points), dtype=float)
        if values.shape == points.shape:
            return values
    except (TypeError, ValueError):
        pass
    return np.array([float(f(t)) for t in points])


def _gauss_kronrod_panel(f: Callable, a: float, b: float) -> Tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    values = _evaluate(f, mid + half * _NODES)
    kronrod = half * float(np.dot(_KRONROD_WEIGHTS, values))
    gauss = half * float(np.dot(_GAUSS_WEIGHTS, values))
    return kronrod, abs(kronrod - gauss)


def adaptive_quad(f: Callable, a: float, b: float, tol: float = QUAD_DEFAULT_TOL,
                  max_panels: int = QUAD_MAX_PANELS) -> QuadResult:
    """
    Integrate f over (a, b) by adaptive bisection of 15-point Gauss-Kronrod panels.

    The panel with the largest error estimate is split until the summed
    estimate drops below `tol` or `max_panels` is reached. Nodes are open, so
    integrable power singularities at either endpoint are fine. An infinite
    upper limit is mapped onto a finite interval by t -> 1/u.
    """
    if not a < b:
        raise DomainError(f"adaptive_quad needs a < b, got a={a}, b={b}")
    if math.isinf(b):
        if math.isinf(a):
            raise DomainError("adaptive_quad needs a finite lower limit")
        if a <= 0.0:
            head = adaptive_quad(f, a, 1.0, tol / 2, max_panels)
            tail = adaptive_quad(f, 1.0, b, tol / 2, max_panels)
            return QuadResult(
                head.value + tail.value,
                head.abs_error_estimate + tail.abs_error_estimate,
                head.subdivisions + tail.subdivisions,
                head.converged and tail.converged,
            )

        def mapped(u):
            u = np.asarray(u, dtype=float)
            return _evaluate(f, 1.0 / u) / (u * u)

        return adaptive_quad(mapped, 0.0, 1.0 / a, tol, max_panels)

    value, error = _gauss_kronrod_panel(f, a, b)
    # max-heap on panel error
    heap = [(-error, a, b, value)]
    total_value, total_error = value, error
    while True:
        floor = 50.0 * np.finfo(float).eps * abs(total_value)
        if total_error <= max(tol, floor):
            return QuadResult(total_value, total_error, len(heap), True)
        if len(heap) >= max_panels:
            logger.warning(f"adaptive_quad hit the {max_panels} panel cap on ({a}, {b}); "
                           f"error estimate {total_error:.3e}")
            return QuadResult(total_value, total_error, len(heap), False)
        neg_err, left, right, panel_value = heapq.heappop(heap)
        mid = 0.5 * (left + right)
        if not (left < mid < right):
            # panel cannot be split further in double precision
            heapq.heappush(heap, (neg_err, left, right, panel_value))
            return QuadResult(total_value, total_error, len(heap), False)
        left_value, left_error = _gauss_kronrod_panel(f, left, mid)
        right_value, right_error = _gauss_kronrod_panel(f, mid, right)
        heapq.heappush(heap, (-left_error, left, mid, left_value))
        heapq.heappush(heap, (-right_error, mid, right, right_value))
        total_value += left_value + right_value - panel_value
        total_error += left_error + right_error + neg_err
        if len(heap) % 512 == 0:
            # resum to shed drift from the running updates
            total_value = math.fsum(item[3] for item in heap)
            total_error = math.fsum(-item[0] for item in heap)


# --- Divergence Test ---

def geometric_cutoffs(upper: float, depth: int = DIVERGENCE_DEFAULT_DEPTH, ratio: float = 0.5) -> List[float]:
    """Cutoffs upper*ratio^k for k = 1..depth."""
    return [upper * ratio ** k for k in range(1, depth + 1)]


def _fitted_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) < 2:
        return math.nan
    slope, _ = np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)
    return float(slope)


def classify_partial_sums(cutoffs: Sequence[float], partials: Sequence[float], upper: float,
                          ratio_threshold: float = DIVERGENCE_RATIO_THRESHOLD,
                          tol: float = DIVERGENCE_FINITE_TOL) -> DivergenceVerdict:
    """
    Decide finiteness from partial integrals I(eps_k) of a nonnegative integrand.

    Finite: the last three increments are each below tol * I and nonincreasing.
    Divergent: the last three increments each exceed ratio_threshold times the
    first, or the increments do not decay (nonnegative log-slope).
    Anything else is undetermined.
    """
    usable = [(float(c), float(v)) for c, v in zip(cutoffs, partials)
              if math.isfinite(c) and math.isfinite(v)]
    probe_values = tuple(usable)
    if len(usable) < DIVERGENCE_MIN_CUTOFFS:
        return DivergenceVerdict(UNDETERMINED, probe_values)

    values = [v for _, v in usable]
    increments = [values[k] - values[k - 1] for k in range(1, len(values))]
    total = values[-1]
    last = increments[-3:]

    if all(inc <= tol * abs(total) for inc in last) and last[0] >= last[1] >= last[2]:
        tail = 0.0
        if last[1] > 0 and 0 < last[2] < last[1]:
            q = last[2] / last[1]
            tail = last[2] * q / (1.0 - q)
        return DivergenceVerdict(FINITE, probe_values, value=total + tail)

    first = increments[0]
    half = len(increments) // 2
    positive = [(k, math.log(inc)) for k, inc in enumerate(increments) if inc > 0][half:]
    decay_slope = _fitted_slope([k for k, _ in positive], [y for _, y in positive])
    growing = (first > 0 and all(inc > ratio_threshold * first for inc in last)) or (
        math.isfinite(decay_slope) and decay_slope >= 0.0 and total > 0
    )
    if growing:
        points = [(math.log(math.log(upper / c)), math.log(v))
                  for c, v in usable if v > 0 and upper / c > 1.0][len(usable) // 2:]
        exponent = _fitted_slope([p[0] for p in points], [p[1] for p in points])
        return DivergenceVerdict(DIVERGENT, probe_values, growth_exponent_estimate=exponent)

    return DivergenceVerdict(UNDETERMINED, probe_values)


def divergence_probe(f: Callable, upper: float, cutoffs: Optional[Sequence[float]] = None,
                     ratio_threshold: float = DIVERGENCE_RATIO_THRESHOLD,
                     tol: float = DIVERGENCE_FINITE_TOL) -> DivergenceVerdict:
    """Decide whether the integral of a nonnegative f over (0, upper] is finite."""
    if cutoffs is None:
        cutoffs = geometric_cutoffs(upper)
    cutoffs = [float(c) for c in cutoffs]
    if any(c <= 0 for c in cutoffs) or any(b >= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise DomainError("divergence_probe needs positive, strictly decreasing cutoffs")
    if cutoffs and cutoffs[0] >= upper:
        raise DomainError("divergence_probe needs cutoffs below the upper limit")

    partials = []
    running = 0.0
    previous = upper
    for cutoff in cutoffs:
        piece = adaptive_quad(f, cutoff, previous, tol=QUAD_DEFAULT_TOL * max(1.0, abs(running)))
        running += piece.value
        partials.append(running)
        previous = cutoff
    verdict = classify_partial_sums(cutoffs, partials, upper, ratio_threshold, tol)
    logger.debug(f"divergence_probe: {verdict.kind} after {len(cutoffs)} cutoffs, I={running:.6g}")
    return verdict
