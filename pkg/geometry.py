# FracPot/geometry.py
"""
Domains as CSG trees of primitives, with membership, certified inradius
lower bounds and the inversion x -> x/|x|^2.

Every query takes a single point of shape (d,) or a stack of shape (n, d).
All domains are open: boundary points are never members.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union as TypingUnion

import numpy as np

from kernels import BallSpec
from utils import DomainError, UnsupportedError

logger = logging.getLogger(__name__)

_BISECTION_STEPS = 80

# --- Domain Nodes ---

@dataclass(frozen=True)
class Ball:
    center: Tuple[float, ...]
    radius: float
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")

    @property
    def spec(self) -> BallSpec:
        return BallSpec(self.center, self.radius)


@dataclass(frozen=True)
class HalfSpace:
    """The open half-space {x : <normal, x> > offset}."""
    normal: Tuple[float, ...]
    offset: float = 0.0
    kind = "halfspace"

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.normal, dtype=float))
        length = float(np.linalg.norm(n))
        if not length > 0:
            raise DomainError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", tuple(float(c) for c in n / length))
        object.__setattr__(self, "offset", float(self.offset) / length)


@dataclass(frozen=True)
class ThornPower:
    """{x : 0 < x_1 < length, |(x_2..x_d)| < width_scale * x_1^gamma}."""
    gamma: float
    length: float = 1.0
    width_scale: float = 1.0
    dim: int = 2
    kind = "thorn"

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"thorn gamma must be positive, got {self.gamma}")
        if not 0 < self.length <= 1:
            raise DomainError(f"thorn length must lie in (0, 1], got {self.length}")
        if not self.width_scale > 0:
            raise DomainError(f"thorn width_scale must be positive, got {self.width_scale}")
        if self.dim < 2:
            raise DomainError("thorns need d >= 2")

    def profile(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.length)
        return self.width_scale * t ** self.gamma


@dataclass(frozen=True)
class CuspRegion:
    """{(x, y) in R^2 : y > |x|^gamma}."""
    gamma: float
    kind = "cusp"

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"cusp gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class WholeSpace:
    dim: int
    kind = "space"


@dataclass(frozen=True)
class Puncture:
    """R^d without a single point."""
    point: Tuple[float, ...]
    kind = "puncture"

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(c) for c in np.atleast_1d(self.point)))


@dataclass(frozen=True)
class Union:
    children: Tuple["DomainSpec", ...]
    kind = "union"

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise DomainError("union needs at least one child")


@dataclass(frozen=True)
class Intersection:
    children: Tuple["DomainSpec", ...]
    kind = "intersection"

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise DomainError("intersection needs at least one child")


@dataclass(frozen=True)
class Difference:
    left: "DomainSpec"
    right: "DomainSpec"
    kind = "difference"

    def __post_init__(self):
        if not isinstance(self.right, (Ball, HalfSpace)):
            raise UnsupportedError("difference subtrahend must be a ball or a half-space")


DomainSpec = TypingUnion[Ball, HalfSpace, ThornPower, CuspRegion, WholeSpace, Puncture,
                         Union, Intersection, Difference]


@dataclass(frozen=True)
class InradiusBound:
    radius: float
    exact: bool


class _PointAtInfinity:
    """The image of the origin under inversion."""

    def __repr__(self) -> str:
        return "POINT_AT_INFINITY"


POINT_AT_INFINITY = _PointAtInfinity()


def domain_dim(D: DomainSpec) -> int:
    if isinstance(D, Ball):
        return len(D.center)
    if isinstance(D, HalfSpace):
        return len(D.normal)
    if isinstance(D, (ThornPower, WholeSpace)):
        return D.dim
    if isinstance(D, CuspRegion):
        return 2
    if isinstance(D, Puncture):
        return len(D.point)
    if isinstance(D, (Union, Intersection)):
        dims = {domain_dim(child) for child in D.children}
        if len(dims) != 1:
            raise DomainError(f"children of a {D.kind} disagree on dimension: {sorted(dims)}")
        return dims.pop()
    if isinstance(D, Difference):
        left, right = domain_dim(D.left), domain_dim(D.right)
        if left != right:
            raise DomainError(f"difference operands disagree on dimension: {left} vs {right}")
        return left
    raise DomainError(f"unknown domain node {D!r}")


def _stack(D: DomainSpec, x) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    arr = np.atleast_2d(arr) if arr.ndim == 1 else arr.reshape(-1, 1) if arr.ndim == 0 else arr
    d = domain_dim(D)
    if arr.shape[-1] != d:
        raise DomainError(f"point dimension {arr.shape[-1]} does not match domain dimension {d}")
    return arr, single


# --- Membership ---

def _contains(D: DomainSpec, xs: np.ndarray) -> np.ndarray:
    if isinstance(D, Ball):
        return np.sum((xs - np.asarray(D.center)) ** 2, axis=-1) < D.radius ** 2
    if isinstance(D, HalfSpace):
        return xs @ np.asarray(D.normal) > D.offset
    if isinstance(D, ThornPower):
        t = xs[:, 0]
        rho = np.linalg.norm(xs[:, 1:], axis=-1)
        return (t > 0) & (t < D.length) & (rho < D.profile(t))
    if isinstance(D, CuspRegion):
        return xs[:, 1] > np.abs(xs[:, 0]) ** D.gamma
    if isinstance(D, WholeSpace):
        return np.ones(len(xs), dtype=bool)
    if isinstance(D, Puncture):
        return np.any(xs != np.asarray(D.point), axis=-1)
    if isinstance(D, Union):
        return np.logical_or.reduce([_contains(child, xs) for child in D.children])
    if isinstance(D, Intersection):
        return np.logical_and.reduce([_contains(child, xs) for child in D.children])
    if isinstance(D, Difference):
        return _contains(D.left, xs) & ~_closure_contains(D.right, xs)
    raise DomainError(f"unknown domain node {D!r}")


def _closure_contains(D: DomainSpec, xs: np.ndarray) -> np.ndarray:
    if isinstance(D, Ball):
        return np.sum((xs - np.asarray(D.center)) ** 2, axis=-1) <= D.radius ** 2
    if isinstance(D, HalfSpace):
        return xs @ np.asarray(D.normal) >= D.offset
    raise UnsupportedError(f"closure test not available for {D.kind}")


def contains(D: DomainSpec, x):
    """True iff x lies in the open set D."""
    xs, single = _stack(D, x)
    result = _contains(D, xs)
    return bool(result[0]) if single else result


# --- Inradius Bounds ---

def _bisect_last_true(predicate, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Largest value (to bisection accuracy) in [lo, hi] where a monotone predicate holds at lo."""
    lo, hi = lo.copy(), hi.copy()
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok = predicate(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def _thorn_inradius(D: ThornPower, xs: np.ndarray) -> np.ndarray:
    t = xs[:, 0]
    rho = np.linalg.norm(xs[:, 1:], axis=-1)
    inside = (t > 0) & (t < D.length) & (rho < D.profile(t))
    t_safe = np.where(inside, t, 1.0)
    rho_safe = np.where(inside, rho, 0.0)
    # a ball of radius r <= t - u stays where x_1 > u, so it clears the wall when
    # |rho| + r <= f(u); balance the two terms over u
    u = _bisect_last_true(lambda s: D.profile(s) - rho_safe < t_safe - s,
                          np.zeros_like(t_safe), t_safe)
    lateral = D.profile(u) - rho_safe
    radius = np.minimum(np.minimum(lateral, t_safe - u), D.length - t_safe)
    return np.where(inside, np.clip(radius, 0.0, None), 0.0)


def _cusp_inradius(D: CuspRegion, xs: np.ndarray) -> np.ndarray:
    a = np.abs(xs[:, 0])
    b = xs[:, 1]
    inside = b > a ** D.gamma
    b_safe = np.where(inside, b, 1.0)
    a_safe = np.where(inside, a, 0.0)
    radius = _bisect_last_true(lambda r: b_safe - r >= (a_safe + r) ** D.gamma,
                               np.zeros_like(b_safe), b_safe)
    return np.where(inside, radius, 0.0)


def _inradius(D: DomainSpec, xs: np.ndarray) -> np.ndarray:
    if isinstance(D, Ball):
        gap = D.radius - np.linalg.norm(xs - np.asarray(D.center), axis=-1)
        return np.clip(gap, 0.0, None)
    if isinstance(D, HalfSpace):
        return np.clip(xs @ np.asarray(D.normal) - D.offset, 0.0, None)
    if isinstance(D, ThornPower):
        return _thorn_inradius(D, xs)
    if isinstance(D, CuspRegion):
        return _cusp_inradius(D, xs)
    if isinstance(D, WholeSpace):
        return np.linalg.norm(xs, axis=-1) + 1.0
    if isinstance(D, Puncture):
        return np.linalg.norm(xs - np.asarray(D.point), axis=-1)
    if isinstance(D, Union):
        return np.maximum.reduce([_inradius(child, xs) for child in D.children])
    if isinstance(D, Intersection):
        return np.minimum.reduce([_inradius(child, xs) for child in D.children])
    if isinstance(D, Difference):
        return np.minimum(_inradius(D.left, xs), _exterior(D.right, xs))
    raise DomainError(f"unknown domain node {D!r}")


def inradius_bounds(D: DomainSpec, xs) -> np.ndarray:
    """Vectorized certified inradius; 0 at points outside D."""
    stack, _ = _stack(D, xs)
    return np.where(_contains(D, stack), _inradius(D, stack), 0.0)


def dist_lower_bound(D: DomainSpec, x) -> InradiusBound:
    """Certified r > 0 with B(x, r) inside D; exact for a lone ball or half-space."""
    xs, _ = _stack(D, x)
    if len(xs) != 1:
        raise DomainError("dist_lower_bound takes a single point; use inradius_bounds for stacks")
    if not _contains(D, xs)[0]:
        raise DomainError(f"point {xs[0].tolist()} is not in the domain")
    radius = float(_inradius(D, xs)[0])
    return InradiusBound(radius, isinstance(D, (Ball, HalfSpace, Puncture)))


# --- Exterior Distance ---

def _thorn_exterior(D: ThornPower, ys: np.ndarray) -> np.ndarray:
    t = ys[:, 0]
    rho = np.linalg.norm(ys[:, 1:], axis=-1)
    width = D.width_scale * D.length ** D.gamma
    dx = np.maximum.reduce([np.zeros_like(t), -t, t - D.length])
    drho = np.clip(rho - width, 0.0, None)
    box = np.hypot(dx, drho)
    # the ball stays where x_1 < t + r and |rho'| > |rho| - r >= f(t + r)
    lateral = _bisect_last_true(lambda r: rho - r >= D.profile(t + r),
                                np.zeros_like(t), np.maximum(rho, 0.0))
    lateral = np.where(rho > D.profile(t), lateral, 0.0)
    return np.maximum(box, lateral)


def _cusp_exterior(D: CuspRegion, ys: np.ndarray) -> np.ndarray:
    a = np.abs(ys[:, 0])
    b = ys[:, 1]
    outside = b < a ** D.gamma
    sideways = _bisect_last_true(lambda r: b + r <= np.clip(a - r, 0.0, None) ** D.gamma,
                                 np.zeros_like(a), a)
    sideways = np.where(outside, sideways, 0.0)
    below = np.clip(-b, 0.0, None)
    return np.maximum(sideways, below)


def _exterior(D: DomainSpec, ys: np.ndarray) -> np.ndarray:
    if isinstance(D, Ball):
        return np.clip(np.linalg.norm(ys - np.asarray(D.center), axis=-1) - D.radius, 0.0, None)
    if isinstance(D, HalfSpace):
        return np.clip(D.offset - ys @ np.asarray(D.normal), 0.0, None)
    if isinstance(D, ThornPower):
        return _thorn_exterior(D, ys)
    if isinstance(D, CuspRegion):
        return _cusp_exterior(D, ys)
    if isinstance(D, (WholeSpace, Puncture)):
        return np.zeros(len(ys))
    if isinstance(D, Union):
        return np.minimum.reduce([_exterior(child, ys) for child in D.children])
    if isinstance(D, Intersection):
        return np.maximum.reduce([_exterior(child, ys) for child in D.children])
    if isinstance(D, Difference):
        carved = np.where(_contains(D.right, ys), _inradius(D.right, ys), 0.0)
        return np.maximum(_exterior(D.left, ys), carved)
    raise DomainError(f"unknown domain node {D!r}")


def exterior_distance(D: DomainSpec, y):
    """Certified lower bound on dist(y, D); 0 when nothing can be certified."""
    ys, single = _stack(D, y)
    result = np.where(_contains(D, ys), 0.0, _exterior(D, ys))
    return float(result[0]) if single else result


# --- Bounding Balls ---

def bounding_ball(D: DomainSpec) -> Optional[BallSpec]:
    """A ball containing D, or None when D is unbounded by construction."""
    if isinstance(D, Ball):
        return D.spec
    if isinstance(D, ThornPower):
        center = np.zeros(D.dim)
        center[0] = D.length / 2.0
        radius = math.hypot(D.length / 2.0, D.width_scale * D.length ** D.gamma)
        return BallSpec(tuple(center), radius * (1.0 + 1e-12))
    if isinstance(D, (HalfSpace, CuspRegion, WholeSpace, Puncture)):
        return None
    if isinstance(D, Union):
        balls = [bounding_ball(child) for child in D.children]
        if any(b is None for b in balls):
            return None
        if len(balls) == 1:
            return balls[0]
        centers = np.array([b.center for b in balls])
        center = centers.mean(axis=0)
        radius = max(float(np.linalg.norm(b.center_array - center)) + b.radius for b in balls)
        return BallSpec(tuple(center), radius)
    if isinstance(D, Intersection):
        balls = [b for b in (bounding_ball(child) for child in D.children) if b is not None]
        return min(balls, key=lambda b: b.radius) if balls else None
    if isinstance(D, Difference):
        return bounding_ball(D.left)
    raise DomainError(f"unknown domain node {D!r}")


# --- Boundary Projection ---

def project_to_boundary(D: DomainSpec, x) -> np.ndarray:
    """
    A point of the complement close to x.

    Exact nearest boundary point for a ball or half-space. For other domains
    the nearest exit along the coordinate directions, located by doubling and
    bisection; x itself when no direction leaves D.
    """
    point = np.asarray(x, dtype=float).reshape(-1)
    if isinstance(D, Ball):
        c = np.asarray(D.center)
        offset = point - c
        norm = float(np.linalg.norm(offset))
        if norm == 0.0:
            offset, norm = np.eye(len(c))[0], 1.0
        return c + D.radius * offset / norm
    if isinstance(D, HalfSpace):
        n = np.asarray(D.normal)
        return point - (float(point @ n) - D.offset) * n

    if isinstance(D, Puncture):
        return np.asarray(D.point)
    if isinstance(D, WholeSpace):
        return point

    d = len(point)
    if not contains(D, point):
        return point
    start = max(float(_inradius(D, point[None, :])[0]), 1e-12)
    directions = np.vstack([np.eye(d), -np.eye(d)])
    best, best_t = point, math.inf
    for u in directions:
        t_in, t_out = 0.0, start
        for _ in range(64):
            if not contains(D, point + t_out * u):
                break
            t_in, t_out = t_out, 2.0 * t_out
        else:
            continue
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (t_in + t_out)
            if contains(D, point + mid * u):
                t_in = mid
            else:
                t_out = mid
        if t_out < best_t:
            best, best_t = point + t_out * u, t_out
    return best


# --- Inversion ---

def invert_point(x, d: Optional[int] = None):
    """Tx = x / |x|^2; the origin maps to POINT_AT_INFINITY and back."""
    if x is POINT_AT_INFINITY:
        if d is None:
            raise DomainError("inverting the point at infinity needs the dimension")
        return np.zeros(d)
    arr = np.asarray(x, dtype=float)
    norms2 = np.sum(arr ** 2, axis=-1, keepdims=True)
    if arr.ndim <= 1:
        if float(norms2) == 0.0:
            return POINT_AT_INFINITY
        return arr / norms2
    if np.any(norms2 == 0):
        raise DomainError("cannot invert a stack containing the origin")
    return arr / norms2


def invert_ball(ball: BallSpec) -> BallSpec:
    """Image of a ball under inversion; the ball must stay away from the origin."""
    c = ball.center_array
    c2 = float(c @ c)
    gap = c2 - ball.radius ** 2
    if not gap > 0:
        raise DomainError("invert_ball needs 0 outside the closed ball")
    return BallSpec(tuple(c / gap), ball.radius / gap)


def invert_domain(D: DomainSpec) -> DomainSpec:
    """
    Image TD of a domain under inversion, for the node shapes where it is again
    expressible: balls away from 0, R^d, punctured spaces at 0, exteriors of
    balls centred at 0, and intersections or unions of those.
    """
    if isinstance(D, Ball):
        spec = invert_ball(D.spec)
        return Ball(spec.center, spec.radius)
    if isinstance(D, WholeSpace):
        return Puncture(tuple(0.0 for _ in range(D.dim)))
    if isinstance(D, Puncture):
        if any(c != 0.0 for c in D.point):
            raise UnsupportedError("only punctures at the origin invert to punctures")
        return D
    if isinstance(D, Difference) and isinstance(D.right, Ball) \
            and all(c == 0.0 for c in D.right.center):
        d = len(D.right.center)
        zero = tuple(0.0 for _ in range(d))
        carved = Intersection((Ball(zero, 1.0 / D.right.radius), Puncture(zero)))
        if isinstance(D.left, WholeSpace):
            return carved
        return Intersection((invert_domain(D.left), carved))
    if isinstance(D, Intersection):
        return Intersection(tuple(invert_domain(child) for child in D.children))
    if isinstance(D, Union):
        return Union(tuple(invert_domain(child) for child in D.children))
    raise UnsupportedError(f"no closed-form inversion for a {D.kind} node")


# --- Sampling Helpers ---

def sample_in_ball(ball: BallSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform in an open ball."""
    d = ball.dim
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = ball.radius * rng.random(n) ** (1.0 / d)
    return ball.center_array + directions * radii[:, None]
