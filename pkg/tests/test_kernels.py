"""Closed-form constants and ball kernels."""

import math

import numpy as np
import pytest
from scipy import integrate

import kernels
from kernels import (
    BallSpec,
    StableParams,
    ball_exit_time,
    ball_green,
    ball_martin,
    ball_martin_ref,
    ball_poisson,
    exit_time_const,
    green_const,
    levy_density,
    poisson_const,
    riesz_const,
    riesz_kernel,
    surface_area,
)
from handlers.selftest_handler import poisson_mass
from utils import DomainError, UnsupportedError


def test_stable_params_validate():
    with pytest.raises(DomainError):
        StableParams(2, 2.0)
    with pytest.raises(DomainError):
        StableParams(0, 1.0)


def test_riesz_const_three_dimensional_cauchy():
    # A_{3,1} = 1 / (2 pi^2)
    assert riesz_const(StableParams(3, 1.0), 1.0) == pytest.approx(1.0 / (2.0 * math.pi ** 2), rel=1e-13)


def test_riesz_const_negative_order_uses_reflection():
    # A_{1,-1} = 1 / pi
    assert riesz_const(StableParams(1, 1.0), -1.0) == pytest.approx(1.0 / math.pi, rel=1e-13)


def test_poisson_const_line():
    assert poisson_const(StableParams(1, 1.0)) == pytest.approx(1.0 / math.pi, rel=1e-13)


def test_green_const_plane():
    # Gamma(1) / (2 pi Gamma(1/2)^2) = 1 / (2 pi^2)
    assert green_const(StableParams(2, 1.0)) == pytest.approx(1.0 / (2.0 * math.pi ** 2), rel=1e-13)


def test_unit_exit_time_on_the_line():
    assert exit_time_const(StableParams(1, 1.0)) == pytest.approx(1.0, rel=1e-13)


def test_surface_areas():
    assert surface_area(1) == pytest.approx(2.0)
    assert surface_area(2) == pytest.approx(2.0 * math.pi)
    assert surface_area(3) == pytest.approx(4.0 * math.pi)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_ball_poisson_has_unit_mass(d, alpha):
    assert poisson_mass(StableParams(d, alpha)) == pytest.approx(1.0, abs=1e-6)


def test_ball_poisson_is_infinite_on_the_sphere(cauchy_plane, unit_disc):
    assert ball_poisson(cauchy_plane, unit_disc, (0.0, 0.0), (1.0, 0.0)) == math.inf


def test_ball_poisson_rejects_points_on_the_wrong_side(cauchy_plane, unit_disc):
    with pytest.raises(DomainError):
        ball_poisson(cauchy_plane, unit_disc, (1.5, 0.0), (2.0, 0.0))
    with pytest.raises(DomainError):
        ball_poisson(cauchy_plane, unit_disc, (0.0, 0.0), (0.5, 0.0))


def test_ball_poisson_vectorizes(cauchy_plane, unit_disc):
    ys = np.array([[2.0, 0.0], [0.0, 3.0]])
    stacked = ball_poisson(cauchy_plane, unit_disc, (0.1, 0.2), ys)
    singles = [ball_poisson(cauchy_plane, unit_disc, (0.1, 0.2), y) for y in ys]
    assert np.allclose(stacked, singles, rtol=1e-15)


def test_ball_poisson_scales_with_the_ball(cauchy_plane):
    small = BallSpec((0.0, 0.0), 1.0)
    large = BallSpec((0.0, 0.0), 2.0)
    # P_{kB}(kx, ky) = k^{-d} P_B(x, y)
    assert ball_poisson(cauchy_plane, large, (0.6, 0.0), (0.0, 5.0)) == pytest.approx(
        ball_poisson(cauchy_plane, small, (0.3, 0.0), (0.0, 2.5)) / 4.0, rel=1e-13)


@pytest.mark.parametrize("d,alpha", [(2, 1.0), (3, 1.0), (3, 1.5), (2, 0.5)])
def test_ball_green_beta_and_quad_agree(d, alpha):
    p = StableParams(d, alpha)
    ball = BallSpec(tuple(0.0 for _ in range(d)), 1.0)
    rng = np.random.default_rng(5)
    for _ in range(5):
        x, v = rng.uniform(-0.5, 0.5, size=(2, d))
        assert ball_green(p, ball, x, v, method="beta") == pytest.approx(
            ball_green(p, ball, x, v, method="quad"), rel=1e-9)


def test_ball_green_is_symmetric(cauchy_plane, unit_disc):
    x, v = (0.2, -0.3), (-0.5, 0.1)
    assert ball_green(cauchy_plane, unit_disc, x, v) == pytest.approx(
        ball_green(cauchy_plane, unit_disc, v, x), rel=1e-14)


def test_ball_green_vanishes_outside(cauchy_plane, unit_disc):
    assert ball_green(cauchy_plane, unit_disc, (0.2, 0.0), (1.5, 0.0)) == 0.0


def test_ball_green_diagonal():
    assert ball_green(StableParams(2, 1.0), BallSpec((0.0, 0.0), 1.0), (0.1, 0.1), (0.1, 0.1)) == math.inf
    line = ball_green(StableParams(1, 1.5), BallSpec((0.0,), 1.0), (0.2,), (0.2,))
    assert math.isfinite(line) and line > 0


def test_ball_green_tends_to_riesz_kernel_for_large_balls():
    p = StableParams(3, 1.0)
    huge = BallSpec((0.0, 0.0, 0.0), 1e6)
    assert ball_green(p, huge, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0)) == pytest.approx(
        riesz_kernel(p, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0)), rel=1e-4)


def test_riesz_kernel_needs_transience():
    with pytest.raises(UnsupportedError):
        riesz_kernel(StableParams(1, 1.0), (0.0,), (1.0,))


def test_ball_exit_time_profile(cauchy_plane, unit_disc):
    centre = ball_exit_time(cauchy_plane, unit_disc, (0.0, 0.0))
    assert centre == pytest.approx(exit_time_const(cauchy_plane))
    assert ball_exit_time(cauchy_plane, unit_disc, (0.6, 0.0)) == pytest.approx(centre * 0.8, rel=1e-13)
    assert ball_exit_time(cauchy_plane, unit_disc, (2.0, 0.0)) == 0.0


def test_ball_martin_closed_form(cauchy_plane):
    assert ball_martin(cauchy_plane, 1.0, (0.5, 0.0), (1.0, 0.0)) == pytest.approx(2.0 * math.sqrt(3.0))
    assert ball_martin(cauchy_plane, 1.0, (0.0, 0.0), (0.0, 1.0)) == pytest.approx(1.0)


def test_ball_martin_needs_boundary_point(cauchy_plane):
    with pytest.raises(DomainError):
        ball_martin(cauchy_plane, 1.0, (0.0, 0.0), (0.5, 0.0))


def test_ball_martin_ref_is_one_at_the_reference(cauchy_plane):
    ball = BallSpec((1.0, 2.0), 0.5)
    assert ball_martin_ref(cauchy_plane, ball, (1.1, 2.1), (1.1, 2.1), (1.5, 2.0)) == pytest.approx(1.0)


def test_levy_density_power_law(cauchy_plane):
    near = levy_density(cauchy_plane, (0.0, 0.0), (1.0, 0.0))
    far = levy_density(cauchy_plane, (0.0, 0.0), (2.0, 0.0))
    assert near / far == pytest.approx(8.0)
    assert levy_density(cauchy_plane, (0.0, 0.0), (0.0, 0.0)) == math.inf


def test_mass_check_detects_wrong_constant(monkeypatch):
    original = kernels.poisson_const
    monkeypatch.setattr(kernels, "poisson_const", lambda p: 1.1 * original(p))
    assert poisson_mass(StableParams(2, 1.0)) != pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("d,alpha", [(1, 0.5), (1, 1.5), (2, 1.0), (3, 0.5)])
def test_ball_kernels_are_translation_invariant(d, alpha):
    p = StableParams(d, alpha)
    rng = np.random.default_rng(11)
    shift = rng.normal(size=d) * 3.0
    centred, moved = BallSpec(tuple(np.zeros(d)), 1.5), BallSpec(tuple(shift), 1.5)
    x = np.full(d, 0.3 / math.sqrt(d))
    v = -0.5 * x
    y = np.full(d, 2.0 / math.sqrt(d))
    assert ball_poisson(p, moved, x + shift, y + shift) == pytest.approx(ball_poisson(p, centred, x, y), rel=1e-12)
    assert ball_green(p, moved, x + shift, v + shift) == pytest.approx(ball_green(p, centred, x, v), rel=1e-9)


@pytest.mark.parametrize("d,alpha", [(1, 0.5), (1, 1.0), (1, 1.5), (2, 1.0), (3, 1.5)])
def test_ball_green_scaling_law(d, alpha):
    p = StableParams(d, alpha)
    r = 3.0
    unit, large = BallSpec(tuple(np.zeros(d)), 1.0), BallSpec(tuple(np.zeros(d)), r)
    x = np.full(d, 0.2 / math.sqrt(d))
    v = np.full(d, -0.4 / math.sqrt(d))
    assert ball_green(p, large, r * x, r * v) == pytest.approx(r ** (alpha - d) * ball_green(p, unit, x, v),
                                                               rel=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_ball_green_integrates_to_exit_time_on_the_line(alpha):
    p = StableParams(1, alpha)
    ball = BallSpec((0.0,), 1.0)
    x = 0.3

    def green(v):
        return float(ball_green(p, ball, (x,), (v,)))

    left, _ = integrate.quad(green, -1.0, x, limit=200)
    right, _ = integrate.quad(green, x, 1.0, limit=200)
    assert left + right == pytest.approx(ball_exit_time(p, ball, (x,)), rel=1e-6)


def test_ball_green_integrates_to_exit_time_in_the_plane(cauchy_plane, unit_disc):
    x = np.array([0.3, 0.0])

    def reach(theta):
        b = x[0] * math.cos(theta) + x[1] * math.sin(theta)
        return -b + math.sqrt(b * b + 1.0 - float(x @ x))

    def integrand(rho, theta):
        v = x + rho * np.array([math.cos(theta), math.sin(theta)])
        return float(ball_green(cauchy_plane, unit_disc, x, v)) * rho

    total, _ = integrate.dblquad(integrand, 0.0, 2.0 * math.pi, 0.0, reach, epsrel=1e-9)
    assert total == pytest.approx(ball_exit_time(cauchy_plane, unit_disc, x), rel=1e-6)


@pytest.mark.parametrize("d,alpha", [(2, 0.5), (2, 1.5), (3, 1.0)])
def test_ball_green_is_dominated_by_the_riesz_kernel(d, alpha):
    p = StableParams(d, alpha)
    rng = np.random.default_rng(12)
    ball = BallSpec(tuple(np.zeros(d)), 1.0)
    directions = rng.normal(size=(40, d))
    points = directions / np.linalg.norm(directions, axis=1, keepdims=True) * rng.random((40, 1)) ** (1.0 / d)
    xs, vs = points[:20], points[20:]
    green = np.asarray(ball_green(p, ball, xs, vs))
    riesz = np.array([float(riesz_kernel(p, a, b)) for a, b in zip(xs, vs)])
    assert np.all(green > 0)
    assert np.all(green <= riesz)
