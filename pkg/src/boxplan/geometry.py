"""Planar primitives shared by every constraint check.

All coordinates are in map units (1 grid cell = 1.0). The tolerances are
chosen well below the 0.05 coordinate grain of the placement lattice.
"""
from __future__ import annotations

import math
from typing import NamedTuple

# Positional equality tolerance (Chebyshev distance).
POS_EPS = 1e-6
# Cross-product threshold below which three points count as collinear.
CROSS_EPS = 1e-9


class Point(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: Point
    b: Point


def is_finite_point(p: Point) -> bool:
    return math.isfinite(p.x) and math.isfinite(p.y)


def points_equal(p: Point, q: Point, eps: float = POS_EPS) -> bool:
    """True iff p and q coincide within eps in both coordinates."""
    return abs(p.x - q.x) <= eps and abs(p.y - q.y) <= eps


def _on_segment(p: Point, q: Point, r: Point) -> bool:
    """Assuming p, q, r collinear: does q lie on the closed segment p-r?"""
    return (
        min(p.x, r.x) - POS_EPS <= q.x <= max(p.x, r.x) + POS_EPS
        and min(p.y, r.y) - POS_EPS <= q.y <= max(p.y, r.y) + POS_EPS
    )


def segments_intersect(s1: Segment, s2: Segment, eps: float = CROSS_EPS) -> bool:
    """True iff the closed segments share at least one point.

    Endpoint touching and collinear overlap both count as intersection.
    Degenerate (zero-length) segments behave as points.
    """
    p1, q1 = s1
    p2, q2 = s2

    # Fast rejection: bounding boxes separated by more than the positional
    # tolerance cannot share a point. This is the hot path on large maps.
    if (max(p1.x, q1.x) + POS_EPS < min(p2.x, q2.x)
            or max(p2.x, q2.x) + POS_EPS < min(p1.x, q1.x)
            or max(p1.y, q1.y) + POS_EPS < min(p2.y, q2.y)
            or max(p2.y, q2.y) + POS_EPS < min(p1.y, q1.y)):
        return False

    # Orientation tests, inlined from _orient: this is the hottest code
    # in the collision checks.
    d1x, d1y = q1.x - p1.x, q1.y - p1.y
    d2x, d2y = q2.x - p2.x, q2.y - p2.y
    v = d1x * (p2.y - p1.y) - d1y * (p2.x - p1.x)
    o1 = 0 if -eps <= v <= eps else (1 if v > 0 else -1)
    v = d1x * (q2.y - p1.y) - d1y * (q2.x - p1.x)
    o2 = 0 if -eps <= v <= eps else (1 if v > 0 else -1)
    v = d2x * (p1.y - p2.y) - d2y * (p1.x - p2.x)
    o3 = 0 if -eps <= v <= eps else (1 if v > 0 else -1)
    v = d2x * (q1.y - p2.y) - d2y * (q1.x - p2.x)
    o4 = 0 if -eps <= v <= eps else (1 if v > 0 else -1)

    if o1 != o2 and o3 != o4 and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True

    if o1 == 0 and _on_segment(p1, p2, q1):
        return True
    if o2 == 0 and _on_segment(p1, q2, q1):
        return True
    if o3 == 0 and _on_segment(p2, p1, q2):
        return True
    if o4 == 0 and _on_segment(p2, q1, q2):
        return True
    return False


def in_reach_band(base: Point, target: Point) -> bool:
    """True iff target lies in the open unit band around base.

    The band is |dx| < 1.0 and |dy| < 1.0; the boundary is excluded.
    """
    return abs(target.x - base.x) < 1.0 and abs(target.y - base.y) < 1.0
