# FracPot/kernels.py
"""
Closed-form constants and kernels of the fractional Laplacian on balls and
on the whole space.

Points are anything numpy can turn into a float array whose last axis has
length d. Kernels that take a second point accept a stack of points of shape
(n, d) there and return an array.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import integrate, special

from numerics import ln_gamma, reg_inc_beta
from utils import DomainError, UnsupportedError

logger = logging.getLogger(__name__)

# --- Parameter Types ---

@dataclass(frozen=True)
class StableParams:
    d: int
    alpha: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (0, 2), got {self.alpha}")


@dataclass(frozen=True)
class BallSpec:
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def translated(self, shift) -> "BallSpec":
        return BallSpec(tuple(self.center_array + np.asarray(shift, dtype=float)), self.radius)

    def scaled(self, k: float) -> "BallSpec":
        return BallSpec(tuple(k * self.center_array), k * self.radius)


def _points(x, d: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != d:
        raise DomainError(f"expected points of dimension {d}, got shape {arr.shape}")
    return arr


def _unwrap(values: np.ndarray):
    return float(values) if np.ndim(values) == 0 else values


def _check_ball(p: StableParams, ball: BallSpec):
    if ball.dim != p.d:
        raise DomainError(f"ball lives in R^{ball.dim} but d={p.d}")


# --- Constants ---

def riesz_const(p: StableParams, gamma: float) -> float:
    """A_{d,gamma} = Gamma((d-gamma)/2) / (2^gamma pi^{d/2} |Gamma(gamma/2)|)."""
    if not -2.0 < gamma < 2.0 or gamma == 0.0:
        raise DomainError(f"riesz_const needs gamma in (-2, 2) without 0, got {gamma}")
    half = gamma / 2.0
    if half > 0:
        log_abs_gamma_half = ln_gamma(half)
    else:
        # |Gamma(-a)| = Gamma(1 - a) / a for 0 < a < 1
        log_abs_gamma_half = ln_gamma(1.0 - half) - math.log(-half)
    log_value = (ln_gamma((p.d - gamma) / 2.0) - gamma * math.log(2.0)
                 - (p.d / 2.0) * math.log(math.pi) - log_abs_gamma_half)
    return math.exp(log_value)


def poisson_const(p: StableParams) -> float:
    """C_{d,alpha} = Gamma(d/2) pi^{-1-d/2} sin(pi alpha / 2)."""
    return math.exp(ln_gamma(p.d / 2.0) - (1.0 + p.d / 2.0) * math.log(math.pi)) * math.sin(
        math.pi * p.alpha / 2.0)


def green_const(p: StableParams) -> float:
    """B_{d,alpha} = Gamma(d/2) / (2^alpha pi^{d/2} Gamma(alpha/2)^2)."""
    return math.exp(ln_gamma(p.d / 2.0) - p.alpha * math.log(2.0)
                    - (p.d / 2.0) * math.log(math.pi) - 2.0 * ln_gamma(p.alpha / 2.0))


def exit_time_const(p: StableParams) -> float:
    """C_{d,alpha} / A_{d,-alpha}, the expected exit time from the centre of the unit ball."""
    return poisson_const(p) / riesz_const(p, -p.alpha)


def surface_area(d: int) -> float:
    """Area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


# --- Whole-Space Kernels ---

def levy_density(p: StableParams, x, y):
    """Jump intensity nu(x, y) = A_{d,-alpha} |y - x|^{-d-alpha}; +inf on the diagonal."""
    xs, ys = _points(x, p.d), _points(y, p.d)
    dist = np.linalg.norm(ys - xs, axis=-1)
    with np.errstate(divide="ignore"):
        values = riesz_const(p, -p.alpha) * np.where(dist > 0, dist, 0.0) ** (-p.d - p.alpha)
    return _unwrap(np.where(dist > 0, values, math.inf))


def riesz_kernel(p: StableParams, x, y):
    """Green function of R^d, A_{d,alpha} |y - x|^{alpha-d}, for alpha < d."""
    if p.alpha >= p.d:
        raise UnsupportedError(f"R^{p.d} has no Riesz Green function for alpha={p.alpha} >= d")
    xs, ys = _points(x, p.d), _points(y, p.d)
    dist = np.linalg.norm(ys - xs, axis=-1)
    with np.errstate(divide="ignore"):
        values = riesz_const(p, p.alpha) * np.where(dist > 0, dist, 0.0) ** (p.alpha - p.d)
    return _unwrap(np.where(dist > 0, values, math.inf))


# --- Ball Kernels ---

def ball_poisson(p: StableParams, ball: BallSpec, x, y):
    """
    Poisson kernel of a ball (density of the exit position started at x).

    x must lie in the open ball and y outside the closed ball; y on the
    sphere returns +inf.
    """
    _check_ball(p, ball)
    c = ball.center_array
    xs, ys = _points(x, p.d), _points(y, p.d)
    r2 = ball.radius ** 2
    inner = r2 - np.sum((xs - c) ** 2, axis=-1)
    if np.any(inner <= 0):
        raise DomainError("ball_poisson needs x inside the open ball")
    outer = np.sum((ys - c) ** 2, axis=-1) - r2
    if np.any(outer < 0):
        raise DomainError("ball_poisson needs y outside the closed ball")
    dist = np.linalg.norm(ys - xs, axis=-1)
    with np.errstate(divide="ignore"):
        values = poisson_const(p) * (inner / np.where(outer > 0, outer, 1.0)) ** (p.alpha / 2.0) \
            * dist ** (-p.d)
    return _unwrap(np.where(outer > 0, values, math.inf))


def _green_integral_beta(p: StableParams, w: np.ndarray) -> np.ndarray:
    """int_0^w s^{alpha/2-1} (1+s)^{-d/2} ds via u = s/(1+s), valid for alpha < d."""
    a, b = p.alpha / 2.0, (p.d - p.alpha) / 2.0
    u = np.where(np.isinf(w), 1.0, w / (1.0 + np.where(np.isinf(w), 0.0, w)))
    return special.beta(a, b) * reg_inc_beta(np.clip(u, 0.0, 1.0), a, b)


def _green_integral_quad(p: StableParams, w: np.ndarray) -> np.ndarray:
    """The same integral by adaptive quadrature, vectorized over w; any alpha."""
    a, b = p.alpha / 2.0, (p.d - p.alpha) / 2.0
    w = np.atleast_1d(np.asarray(w, dtype=float))
    upper = w / (1.0 + w)

    # u = upper * s^{1/a} absorbs the u^{a-1} endpoint singularity
    def integrand(s):
        return (1.0 - upper * s ** (1.0 / a)) ** (b - 1.0)

    values, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, norm="max")
    return upper ** a / a * values


def ball_green(p: StableParams, ball: BallSpec, x, v, method: str = "beta"):
    """
    Green function of a ball.

    Vanishes when either point is outside the open ball. On the diagonal it
    is +inf when alpha <= d and finite when alpha > d = 1. `method="quad"`
    evaluates the radial integral by adaptive quadrature instead of the
    incomplete beta function; alpha >= d always takes that path.
    """
    _check_ball(p, ball)
    if method not in ("beta", "quad"):
        raise DomainError(f"unknown ball_green method '{method}'")
    c = ball.center_array
    xs, vs = _points(x, p.d), _points(v, p.d)
    xs, vs = np.broadcast_arrays(xs, vs)
    r2 = ball.radius ** 2
    gx = r2 - np.sum((xs - c) ** 2, axis=-1)
    gv = r2 - np.sum((vs - c) ** 2, axis=-1)
    inside = (gx > 0) & (gv > 0)
    dist2 = np.sum((xs - vs) ** 2, axis=-1)
    diagonal = inside & (dist2 == 0)
    off = inside & (dist2 > 0)

    result = np.zeros(np.shape(dist2))
    if np.any(off):
        w = gx[off] * gv[off] / dist2[off]
        if method == "beta" and p.alpha < p.d:
            integral = _green_integral_beta(p, w)
        else:
            integral = _green_integral_quad(p, w)
        result[off] = green_const(p) * dist2[off] ** ((p.alpha - p.d) / 2.0) * integral
    if np.any(diagonal):
        if p.alpha <= p.d:
            result[diagonal] = math.inf
        else:
            # limit of |x-v|^{alpha-1} int_0^w as v -> x, d = 1 < alpha
            result[diagonal] = green_const(p) * gx[diagonal] ** (p.alpha - 1.0) * 2.0 / (p.alpha - 1.0)
    return _unwrap(result)


def ball_exit_time(p: StableParams, ball: BallSpec, x):
    """Expected exit time s_B(x) = (C/A)(r^2 - |x - c|^2)^{alpha/2}; 0 off the closed ball."""
    _check_ball(p, ball)
    xs = _points(x, p.d)
    gap = ball.radius ** 2 - np.sum((xs - ball.center_array) ** 2, axis=-1)
    return _unwrap(exit_time_const(p) * np.clip(gap, 0.0, None) ** (p.alpha / 2.0))


def ball_martin(p: StableParams, r: float, x, y):
    """Martin kernel of B(0, r) with reference point 0, for y on the sphere."""
    xs, ys = _points(x, p.d), _points(y, p.d)
    y_norm = np.linalg.norm(ys, axis=-1)
    if np.any(np.abs(y_norm - r) > 1e-9 * r):
        raise DomainError("ball_martin needs |y| = r")
    x2 = np.sum(xs ** 2, axis=-1)
    if np.any(x2 >= r * r):
        raise DomainError("ball_martin needs |x| < r")
    dist = np.linalg.norm(xs - ys, axis=-1)
    return _unwrap(r ** (p.d - p.alpha) * (r * r - x2) ** (p.alpha / 2.0) / dist ** p.d)


def ball_martin_ref(p: StableParams, ball: BallSpec, x, x0, y):
    """Martin kernel of an arbitrary ball with reference point x0."""
    _check_ball(p, ball)
    c = ball.center_array
    shifted_y = _points(y, p.d) - c
    top = ball_martin(p, ball.radius, _points(x, p.d) - c, shifted_y)
    bottom = ball_martin(p, ball.radius, _points(x0, p.d) - c, shifted_y)
    return _unwrap(np.asarray(top) / np.asarray(bottom))
