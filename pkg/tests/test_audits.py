"""Property audits: closed-form Kelvin checks, pass rules and small Monte Carlo audits."""

import math

import pytest

from audits import (
    MAX_DEVIATION,
    MAX_RATIO,
    STABILITY,
    AuditReport,
    AuditSample,
    bhp_audit,
    evaluate_report,
    factorization_audit,
    far_field_exit_time,
    harnack_audit,
    harnack_bound,
    harnack_pair_audit,
    kelvin_exit_time_check,
    kelvin_green_check,
    kelvin_martin_check,
    kelvin_poisson_check,
    markov_audit,
)
from geometry import Ball, HalfSpace, Intersection, ThornPower, Union
from kernels import BallSpec, StableParams
from sampler import IndicatorPayoff, RngStream, WalkConfig
from utils import DomainError, UnsupportedError

SHIFTED_DISC = BallSpec((3.0, 0.0), 1.0)


def make_report(worst, criterion, tolerance=1.0, **details):
    return AuditReport("synthetic", (AuditSample("c", 1.0, 1.0, 1.0),), worst, False, tolerance, criterion,
                       details)


def test_pass_rules():
    assert evaluate_report(make_report(0.5, MAX_DEVIATION))
    assert not evaluate_report(make_report(1.5, MAX_DEVIATION))
    assert not evaluate_report(make_report(math.inf, MAX_DEVIATION))
    assert evaluate_report(make_report(0.5, MAX_RATIO, doubled_worst_ratio=0.7))
    assert not evaluate_report(make_report(0.5, MAX_RATIO, doubled_worst_ratio=math.inf))
    assert evaluate_report(make_report(10.0, STABILITY, 2.0, ceiling=100.0, stability_gap_sigmas=1.0))
    assert not evaluate_report(make_report(10.0, STABILITY, 2.0, ceiling=100.0, stability_gap_sigmas=3.0))
    with pytest.raises(DomainError):
        evaluate_report(make_report(0.5, "unknown"))


def test_harnack_bound_formula():
    assert harnack_bound(2, 0.5, 1.0) == pytest.approx(9.0)


def test_kelvin_green_identity_holds():
    report = kelvin_green_check(StableParams(2, 1.0), SHIFTED_DISC, 100, RngStream(1))
    assert report.passed, report.to_dict()
    assert report.worst_ratio < 1e-9


def test_kelvin_green_needs_transience():
    with pytest.raises(UnsupportedError):
        kelvin_green_check(StableParams(1, 1.5), BallSpec((3.0,), 1.0), 10, RngStream(1))


def test_kelvin_needs_origin_outside_the_ball():
    with pytest.raises(DomainError):
        kelvin_green_check(StableParams(2, 1.0), BallSpec((0.5, 0.0), 1.0), 10, RngStream(1))


def test_kelvin_exit_time_identity_holds():
    report = kelvin_exit_time_check(StableParams(3, 1.0), BallSpec((4.0, 0.0, 0.0), 1.0), offsets=(0.0, 0.5))
    assert report.passed, report.to_dict()


def test_kelvin_exit_time_vanishes_at_the_matched_rate():
    # x at distance 1e-2 and 1e-3 from the sphere: both sides shrink like delta^{alpha/2}
    p = StableParams(3, 1.0)
    report = kelvin_exit_time_check(p, BallSpec((4.0, 0.0, 0.0), 1.0), offsets=(0.99, 0.999, -0.99, -0.999),
                                    tol=1e-4)
    assert report.passed, report.to_dict()
    outer_near, outer_nearer, inner_near, inner_nearer = report.samples
    for near, nearer in ((outer_near, outer_nearer), (inner_near, inner_nearer)):
        assert nearer.lhs / near.lhs == pytest.approx(nearer.rhs / near.rhs, rel=1e-3)
        assert nearer.lhs / near.lhs == pytest.approx(10.0 ** -0.5, rel=0.02)


def test_kelvin_exit_time_is_consistent_under_scaling():
    p = StableParams(3, 1.0)
    small = kelvin_exit_time_check(p, BallSpec((4.0, 0.0, 0.0), 1.0), offsets=(0.5,))
    large = kelvin_exit_time_check(p, BallSpec((8.0, 0.0, 0.0), 2.0), offsets=(0.5,))
    assert small.passed and large.passed
    # s_B scales like k^alpha and |x|^{d-alpha} like k^{d-alpha}
    assert large.samples[0].rhs == pytest.approx(2.0 ** 3 * small.samples[0].rhs, rel=1e-12)
    assert large.samples[0].lhs == pytest.approx(2.0 ** 3 * small.samples[0].lhs, rel=1e-5)


def test_kelvin_martin_and_poisson_identities_hold():
    p = StableParams(2, 1.0)
    assert kelvin_martin_check(p, SHIFTED_DISC, 50, RngStream(2)).passed
    assert kelvin_poisson_check(p, SHIFTED_DISC, 50, RngStream(3)).passed


@pytest.mark.statistical
def test_harnack_ratios_stay_below_the_bound():
    p = StableParams(2, 1.0)
    report = harnack_audit(p, Ball((0.0, 0.0), 1.0), (0.0, 0.0), 0.25, 0.5, (2.0, 0.0), 3, 2000, RngStream(4))
    assert report.passed
    assert report.details["closed_form_max_ratio"] <= report.details["bound"]


def test_harnack_needs_r_below_s():
    with pytest.raises(DomainError):
        harnack_audit(StableParams(2, 1.0), Ball((0.0, 0.0), 1.0), (0.0, 0.0), 0.5, 0.25, (2.0, 0.0), 1, 10,
                      RngStream(0))


@pytest.mark.statistical
@pytest.mark.parametrize("d, alpha, outer, inner, x", [
    (2, 1.0, Ball((0.0, 0.0), 1.0), Ball((0.2, 0.0), 0.5), (0.3, 0.1)),
    (3, 1.5, Ball((0.0, 0.0, 0.0), 1.0), Ball((0.0, 0.1, 0.0), 0.6), (0.1, 0.2, -0.1)),
    (2, 1.0, Union((Ball((-0.4, 0.0), 0.6), Ball((0.4, 0.0), 0.6))), Ball((-0.4, 0.0), 0.6), (-0.3, 0.1)),
    (1, 0.5, Ball((0.0,), 1.0), Ball((0.1,), 0.3), (0.0,)),
    (2, 1.5, Intersection((Ball((0.0, 0.0), 1.0), HalfSpace((0.0, 1.0), 0.0))), Ball((0.0, 0.4), 0.3),
     (0.05, 0.4)),
], ids=["disc", "ball-3d", "overlapping-discs", "interval", "half-disc"])
def test_two_stage_walks_agree_with_direct_walks(d, alpha, outer, inner, x):
    p = StableParams(d, alpha)
    right_half = IndicatorPayoff(HalfSpace(tuple([1.0] + [0.0] * (d - 1)), 0.0))
    report = markov_audit(p, outer, inner, [x], 10_000, WalkConfig(), RngStream(5), payoff=right_half)
    assert report.criterion == MAX_DEVIATION
    assert len(report.samples) == 2
    assert report.passed, report.to_dict()


@pytest.mark.statistical
def test_far_field_kernel_matches_exit_time():
    p = StableParams(2, 1.0)
    report = far_field_exit_time(p, Ball((0.0, 0.0), 1.0), (0.3, 0.0), 1000.0, 10_000, WalkConfig(), RngStream(6))
    assert report.samples[0].ratio == pytest.approx(1.0, rel=0.1)


def test_reports_serialize():
    report = kelvin_green_check(StableParams(2, 1.0), SHIFTED_DISC, 5, RngStream(1))
    body = report.to_dict()
    assert body["name"] == report.name
    assert len(body["samples"]) == len(report.rows()) == 5


@pytest.mark.statistical
@pytest.mark.parametrize("domain, r", [
    (Ball((0.0, 0.0), 1.0), 1.5),
    (Intersection((Ball((0.0, 0.0), 1.0), HalfSpace((0.0, 1.0), 0.0))), 1.5),
    (Union((Ball((-0.25, 0.0), 0.2), Ball((0.25, 0.0), 0.2))), 1.0),
    (ThornPower(1.5), 1.0),
], ids=["disc", "half-disc", "two-discs", "thorn"])
def test_boundary_harnack_ratios_are_stable(domain, r):
    p = StableParams(2, 1.0)
    report = bhp_audit(p, domain, r, 2, 2000, RngStream(7))
    assert report.criterion == STABILITY
    assert len(report.samples) == 2
    assert report.passed, report.to_dict()
    assert report.worst_ratio <= report.details["ceiling"]
    if isinstance(domain, Ball):
        assert report.details["closed_form_max_sigmas"] < 3.0


def test_boundary_harnack_needs_room_for_the_points():
    p = StableParams(2, 1.0)
    with pytest.raises(DomainError):
        bhp_audit(p, Ball((5.0, 0.0), 0.5), 1.0, 2, 10, RngStream(0))


@pytest.mark.statistical
def test_factorization_ratios_stay_bounded_on_the_disc():
    p = StableParams(2, 1.0)
    report = factorization_audit(p, Ball((0.0, 0.0), 1.0), (2.0, 0.0), 0.5, 3, 1000, RngStream(8), quad_points=16)
    assert report.passed, report.to_dict()
    assert report.details["lambda"] > 0
    assert all(0.0 < r < report.tolerance for r in report.details["closed_form_ratios"])


@pytest.mark.parametrize("domain, y, p_cut", [
    (Ball((0.5, 0.0), 1.0), (3.0, 0.0), 0.5),
    (Ball((0.0, 0.0), 1.0), (0.5, 0.0), 0.5),
    (Ball((0.0, 0.0), 1.0), (3.0, 0.0), 1.5),
])
def test_factorization_preconditions(domain, y, p_cut):
    with pytest.raises(DomainError):
        factorization_audit(StableParams(2, 1.0), domain, y, p_cut, 2, 10, RngStream(0))


@pytest.mark.statistical
def test_harnack_pair_across_components():
    p = StableParams(2, 1.0)
    D = Union((Ball((-2.0, 0.0), 1.0), Ball((2.0, 0.0), 1.0)))
    report = harnack_pair_audit(p, D, (-2.0, 0.0), (2.0, 0.0), [(0.0, 3.0), (0.0, -5.0)], 2000, RngStream(9))
    assert len(report.samples) == 2
    assert report.passed, report.to_dict()
    # charges on the symmetry axis see both components alike
    assert all(s.ratio == pytest.approx(1.0, rel=0.3) for s in report.samples)


def test_harnack_pair_needs_charges():
    with pytest.raises(DomainError):
        harnack_pair_audit(StableParams(2, 1.0), Ball((0.0, 0.0), 1.0), (0.1, 0.0), (0.2, 0.0), [], 10,
                           RngStream(0))
