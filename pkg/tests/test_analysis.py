"""Accessibility verdicts and Martin kernel levels."""

import math

import numpy as np
import pytest

from analysis import (
    ACCESSIBLE,
    INACCESSIBLE,
    INFINITY_POINT,
    UNDETERMINED,
    classify_boundary_point,
    classify_infinity,
    cusp_test,
    estimate_martin_kernel,
    thorn_integral_test,
    thorn_profile_test,
)
from geometry import Ball, CuspRegion, Difference, HalfSpace, Intersection, ThornPower, Union, WholeSpace
from kernels import StableParams, ball_martin
from sampler import RngStream, WalkConfig
from utils import DomainError, UnsupportedError


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("gamma,expected", [(0.5, ACCESSIBLE), (1.0, ACCESSIBLE), (1.25, INACCESSIBLE),
                                            (2.0, INACCESSIBLE)])
def test_thorn_dichotomy(alpha, gamma, expected):
    assert thorn_integral_test(StableParams(2, alpha), gamma).verdict == expected


def test_thorn_integral_closed_form():
    # m = d + alpha - 1 = 2, I = 1 / (m (gamma - 1))
    result = thorn_integral_test(StableParams(2, 1.0), 1.5)
    assert result.value == pytest.approx(1.0)
    assert thorn_integral_test(StableParams(3, 0.5), 3.0, width_scale=2.0).value == pytest.approx(
        2.0 ** 2.5 / (2.5 * 2.0))


def test_thorn_test_rejects_bad_exponents():
    with pytest.raises(DomainError):
        thorn_integral_test(StableParams(2, 1.0), 0.0)


def test_general_profiles_use_the_partial_sums():
    p = StableParams(2, 1.0)
    assert thorn_profile_test(p, lambda t: t ** 2).verdict == INACCESSIBLE
    assert thorn_profile_test(p, lambda t: t).verdict == ACCESSIBLE


def test_cusp_reduces_to_reciprocal_thorn():
    p = StableParams(2, 1.0)
    assert cusp_test(p, 0.5).verdict == INACCESSIBLE
    assert cusp_test(p, 1.5).verdict == ACCESSIBLE
    assert cusp_test(p, 0.5).value == thorn_integral_test(p, 2.0).value
    with pytest.raises(UnsupportedError):
        cusp_test(StableParams(3, 1.0), 0.5)


def test_apex_of_named_shapes_takes_the_exact_test():
    p = StableParams(2, 1.0)
    thorn = classify_boundary_point(p, ThornPower(1.5), (0.0, 0.0), RngStream(0))
    assert thorn.verdict == INACCESSIBLE
    assert thorn.value == pytest.approx(1.0)
    cusp = classify_boundary_point(p, CuspRegion(2.0), (0.0, 0.0), RngStream(0))
    assert cusp.verdict == ACCESSIBLE


def test_interior_points_are_not_boundary_points():
    with pytest.raises(DomainError):
        classify_boundary_point(StableParams(2, 1.0), Ball((0.0, 0.0), 1.0), (0.2, 0.0), RngStream(0))


@pytest.mark.parametrize("domain", [
    Intersection((ThornPower(2.0), Ball((0.0, 0.0), 2.0))),
    Difference(ThornPower(2.0), Ball((3.0, 0.0), 0.5)),
    Union((ThornPower(2.0), Ball((3.0, 0.0), 0.5))),
])
def test_apex_inside_a_composite_takes_the_exact_test(domain):
    result = classify_boundary_point(StableParams(2, 1.0), domain, (0.0, 0.0), RngStream(0),
                                     budget=5, shells=10, points_per_shell=16)
    assert result.verdict == INACCESSIBLE
    assert result.value == pytest.approx(0.5)


def test_points_away_from_the_domain_are_rejected():
    with pytest.raises(DomainError):
        classify_boundary_point(StableParams(2, 1.0), Ball((0.0, 0.0), 1.0), (3.0, 0.0), RngStream(0))


def test_too_few_shells_leave_the_verdict_open():
    result = classify_boundary_point(StableParams(2, 1.0), Ball((1.0, 0.0), 1.0), (0.0, 0.0), RngStream(1),
                                     budget=5, shells=3, points_per_shell=8)
    assert result.verdict == UNDETERMINED
    assert len(result.evidence["shell_hits"]) == 3


@pytest.mark.statistical
@pytest.mark.parametrize("domain", [
    # the half-spaces do not contain the apex, so the shells decide
    Intersection((ThornPower(0.5), HalfSpace((1.0, 0.0), 0.0))),
    Intersection((CuspRegion(2.0), HalfSpace((0.0, 1.0), 0.0))),
])
def test_blunt_apex_is_accessible_by_shells(domain):
    result = classify_boundary_point(StableParams(2, 1.0), domain, (0.0, 0.0), RngStream(3),
                                     budget=20, shells=6, points_per_shell=16)
    assert result.verdict == ACCESSIBLE
    assert hasattr(result.evidence, "kind")


@pytest.mark.statistical
@pytest.mark.slow
def test_sharp_thorn_is_inaccessible_by_shells():
    domain = Intersection((ThornPower(2.0, width_scale=8.0), HalfSpace((1.0, 0.0), 0.0)))
    result = classify_boundary_point(StableParams(2, 1.0), domain, (0.0, 0.0), RngStream(4),
                                     budget=10, shells=7, points_per_shell=1024)
    assert result.verdict == INACCESSIBLE
    assert math.isfinite(result.value)


@pytest.mark.statistical
def test_smooth_boundary_point_is_accessible():
    result = classify_boundary_point(StableParams(2, 1.0), Ball((0.0, 0.0), 1.0), (1.0, 0.0), RngStream(3),
                                     budget=20, shells=6, points_per_shell=16)
    assert result.verdict == ACCESSIBLE
    assert result.to_dict()["boundary_point"] == [1.0, 0.0]


def test_infinity_needs_an_unbounded_domain():
    with pytest.raises(DomainError):
        classify_infinity(StableParams(2, 1.0), Ball((0.0, 0.0), 1.0), (0.0, 0.0), RngStream(0))


def test_whole_space_never_exits():
    result = classify_infinity(StableParams(2, 1.0), WholeSpace(2), (0.0, 0.0), RngStream(1), budget=20, levels=2)
    assert result.verdict == ACCESSIBLE
    assert result.boundary_point == INFINITY_POINT
    assert all(level["censored_fraction"] == 1.0 for level in result.evidence["levels"])


@pytest.mark.statistical
@pytest.mark.slow
def test_infinity_of_a_ball_exterior_agrees_with_its_inversion():
    p = StableParams(2, 1.0)
    exterior = Difference(WholeSpace(2), Ball((0.0, 0.0), 1.0))
    result = classify_infinity(p, exterior, (2.0, 0.0), RngStream(6), budget=200, levels=2, cross_check=True,
                               shell_budget=10)
    # transient walks escape, so the exit time is infinite
    assert result.verdict == ACCESSIBLE
    assert result.evidence["inversion"]["verdict"] == ACCESSIBLE
    assert result.evidence["inversion_agrees"]


def test_cross_check_reports_unsupported_inversions():
    result = classify_infinity(StableParams(2, 1.0), HalfSpace((0.0, 1.0), 0.5), (0.0, 1.0), RngStream(2),
                               budget=20, levels=2, cross_check=True)
    assert "skipped" in result.evidence["inversion"]


def test_martin_ratio_is_one_at_the_reference_point():
    p = StableParams(2, 1.0)
    result = estimate_martin_kernel(p, Ball((0.0, 0.0), 1.0), (0.2, 0.1), (0.2, 0.1), (1.0, 0.0),
                                    [0.1, 0.05], 200, WalkConfig(), RngStream(4))
    assert result.extrapolated.mean == pytest.approx(1.0)
    assert result.extrapolated.stderr == 0.0
    assert result.stable


def test_martin_levels_approach_the_ball_kernel():
    p = StableParams(2, 1.0)
    radii = [0.05, 0.025, 0.0125, 0.00625]
    result = estimate_martin_kernel(p, Ball((0.0, 0.0), 1.0), (0.5, 0.0), (0.0, 0.0), (1.0, 0.0),
                                    radii, 100, WalkConfig(), RngStream(5))
    exact = float(ball_martin(p, 1.0, (0.5, 0.0), (1.0, 0.0)))
    # D is its own bounding ball, so the exit correction vanishes and only the O(r) bias is left
    errors = [level.ratio.mean / exact - 1.0 for level in result.levels]
    assert all(e > 0 for e in errors)
    assert all(later < 0.6 * earlier for earlier, later in zip(errors, errors[1:]))
    assert all(level.ratio.stderr < 1e-12 for level in result.levels)
    assert result.extrapolated.mean == pytest.approx(exact, rel=6e-3)
    assert math.isclose(result.levels[-1].radius, 0.00625)


def test_martin_radii_must_decrease():
    with pytest.raises(DomainError):
        estimate_martin_kernel(StableParams(2, 1.0), Ball((0.0, 0.0), 1.0), (0.5, 0.0), (0.0, 0.0),
                               (1.0, 0.0), [0.05, 0.1], 10, WalkConfig(), RngStream(0))


def test_martin_needs_a_bounded_domain():
    with pytest.raises(UnsupportedError):
        estimate_martin_kernel(StableParams(2, 1.0), HalfSpace((0.0, 1.0)), (0.0, 1.0), (0.0, 2.0),
                               (0.0, 0.0), [0.1], 10, WalkConfig(), RngStream(0))


def test_classification_serializes():
    body = thorn_integral_test(StableParams(2, 1.0), 2.0).to_dict()
    assert body["verdict"] == INACCESSIBLE
    assert body["evidence"]["kind"] in ("finite", "divergent", "undetermined")
    assert np.isfinite(body["value"])
