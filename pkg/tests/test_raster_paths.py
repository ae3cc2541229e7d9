import math
import random

import pytest

from conftest import LISTING_PATH

from coraster.raster import MalformedPath, flatten_path


def quad_point(p0, c, p1, t):
    """Direct quadratic Bezier evaluation, the test-side oracle."""
    mt = 1 - t
    return (
        mt * mt * p0[0] + 2 * t * mt * c[0] + t * t * p1[0],
        mt * mt * p0[1] + 2 * t * mt * c[1] + t * t * p1[1],
    )


def point_to_segment(p, a, b):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / seg_sq))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def point_to_polyline(p, points):
    if len(points) == 1:
        return math.hypot(p[0] - points[0][0], p[1] - points[0][1])
    return min(point_to_segment(p, a, b) for a, b in zip(points, points[1:]))


def max_curve_deviation(p0, c, p1, polyline, samples=100):
    return max(
        point_to_polyline(quad_point(p0, c, p1, i / (samples - 1)), polyline)
        for i in range(samples)
    )


def test_straight_segments_pass_through():
    assert flatten_path([["M", 0, 0], ["L", 10, 0]]) == [(0, 0), (10, 0)]


def test_collinear_quadratic_collapses_to_segment():
    polyline = flatten_path([["M", 0, 0], ["Q", 1, 0, 2, 0]])
    assert polyline[0] == (0, 0) and polyline[-1] == (2, 0)
    deviation = max_curve_deviation((0, 0), (1, 0), (2, 0), polyline)
    assert deviation < 1e-12


def test_listing_path_endpoints():
    polyline = flatten_path(LISTING_PATH)
    assert polyline[0] == (446.99, 38)
    assert polyline[-1] == (453.01, 39)
    assert len(polyline) >= 6


@pytest.mark.parametrize("tolerance", [0.25, 0.05, 1.0])
def test_deviation_bounded_by_tolerance(tolerance):
    rng = random.Random(9)
    for _ in range(30):
        p0 = (rng.uniform(-50, 50), rng.uniform(-50, 50))
        c = (rng.uniform(-50, 50), rng.uniform(-50, 50))
        p1 = (rng.uniform(-50, 50), rng.uniform(-50, 50))
        polyline = flatten_path([["M", *p0], ["Q", *c, *p1]], tolerance)
        assert max_curve_deviation(p0, c, p1, polyline) <= tolerance + 1e-9


def test_single_move_yields_one_point():
    assert flatten_path([["M", 3, 4]]) == [(3, 4)]


def test_arity_violation_rejected():
    with pytest.raises(MalformedPath):
        flatten_path([["M", 0, 0], ["Q", 1, 2, 3]])
    with pytest.raises(MalformedPath):
        flatten_path([["L", 0, 0]])
    with pytest.raises(MalformedPath):
        flatten_path([])
    with pytest.raises(MalformedPath):
        flatten_path([["M", 0, 0], ["M", 1, 1]])


def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        flatten_path([["M", 0, 0]], tolerance=0)
