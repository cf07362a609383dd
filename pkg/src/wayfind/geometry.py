"""Plain 2D geometry helpers shared by the building model, navmesh and simulator.

Everything works on (x, y) tuples in centimeters. No numpy here: these
functions sit in the per-tick hot path and plain floats are faster for
single points.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

Point = tuple[float, float]
Segment = tuple[Point, Point]


def dist(a: Point, b: Point) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def dist3(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)


def cross2(o: Point, a: Point, b: Point) -> float:
    """Signed doubled area of triangle (o, a, b); > 0 means b left of o->a."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_area(points: Sequence[Point]) -> float:
    """Signed shoelace area (positive for counter-clockwise rings)."""
    total = 0.0
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2.0


def polygon_centroid(points: Sequence[Point]) -> Point:
    """Area centroid of a simple polygon."""
    a = 0.0
    cx = 0.0
    cy = 0.0
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        w = x0 * y1 - x1 * y0
        a += w
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    if abs(a) < 1e-12:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        return (sum(xs) / n, sum(ys) / n)
    return (cx / (3.0 * a), cy / (3.0 * a))


def point_in_polygon(p: Point, ring: Sequence[Point]) -> bool:
    """Even-odd rule; points exactly on the boundary may go either way."""
    x, y = p
    inside = False
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            t = (y - y0) / (y1 - y0)
            if x < x0 + t * (x1 - x0):
                inside = not inside
    return inside


def point_in_triangle(p: Point, a: Point, b: Point, c: Point, eps: float = 1e-6) -> bool:
    """Containment with a boundary tolerance of ``eps`` centimeters.

    The sign tests are normalised by edge length so eps is an actual
    distance, not a raw cross-product bound.
    """
    d1 = cross2(a, b, p)
    d2 = cross2(b, c, p)
    d3 = cross2(c, a, p)
    la = dist(a, b) or 1.0
    lb = dist(b, c) or 1.0
    lc = dist(c, a) or 1.0
    lim_a = -eps * la
    lim_b = -eps * lb
    lim_c = -eps * lc
    if d1 >= lim_a and d2 >= lim_b and d3 >= lim_c:
        return True
    return d1 <= -lim_a and d2 <= -lim_b and d3 <= -lim_c


def closest_point_on_segment(p: Point, a: Point, b: Point) -> Point:
    ax, ay = a
    bx, by = b
    dx = bx - ax
    dy = by - ay
    den = dx * dx + dy * dy
    if den <= 0.0:
        return a
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / den
    if t <= 0.0:
        return a
    if t >= 1.0:
        return b
    return (ax + t * dx, ay + t * dy)


def segment_distance(p: Point, a: Point, b: Point) -> float:
    return dist(p, closest_point_on_segment(p, a, b))


def ray_segment_intersection(
    origin: Point, direction: Point, a: Point, b: Point
) -> float | None:
    """Parameter t >= 0 along the ray where it crosses segment ab, else None.

    ``direction`` need not be normalised; t is in units of |direction|.
    """
    ox, oy = origin
    dx, dy = direction
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = dx * ey - dy * ex
    if abs(den) < 1e-12:
        return None
    t = ((a[0] - ox) * ey - (a[1] - oy) * ex) / den
    if t < 0.0:
        return None
    u = ((a[0] - ox) * dy - (a[1] - oy) * dx) / den
    if u < 0.0 or u > 1.0:
        return None
    return t


def normalize_angle_deg(angle: float) -> float:
    """Wrap into [-180, 180)."""
    if -180.0 <= angle < 180.0:
        return angle
    a = math.fmod(angle + 180.0, 360.0)
    if a < 0.0:
        a += 360.0
    return a - 180.0


def polyline_length(points: Sequence[Sequence[float]]) -> float:
    """Arc length of a 2D or 3D polyline."""
    total = 0.0
    for p, q in zip(points, points[1:]):
        if len(p) >= 3:
            total += dist3(p, q)
        else:
            total += math.hypot(q[0] - p[0], q[1] - p[1])
    return total


def bounding_box(points: Iterable[Point]) -> tuple[float, float, float, float]:
    xs = []
    ys = []
    for x, y in points:
        xs.append(x)
        ys.append(y)
    return (min(xs), min(ys), max(xs), max(ys))


def collinear_overlap(
    a0: Point, a1: Point, b0: Point, b1: Point, eps: float = 1e-6
) -> Segment | None:
    """Shared portion of two collinear segments, or None.

    Used to find portals between walkable polygons whose boundaries touch
    along partial edges, and to subtract door openings from wall segments.
    """
    ax, ay = a1[0] - a0[0], a1[1] - a0[1]
    length = math.hypot(ax, ay)
    if length < eps:
        return None
    ux, uy = ax / length, ay / length
    # both endpoints of b must sit on the carrier line of a
    for p in (b0, b1):
        off = abs((p[0] - a0[0]) * uy - (p[1] - a0[1]) * ux)
        if off > eps:
            return None
    t0 = 0.0
    t1 = length
    s0 = (b0[0] - a0[0]) * ux + (b0[1] - a0[1]) * uy
    s1 = (b1[0] - a0[0]) * ux + (b1[1] - a0[1]) * uy
    lo = max(t0, min(s0, s1))
    hi = min(t1, max(s0, s1))
    if hi - lo <= eps:
        return None
    return (
        (a0[0] + ux * lo, a0[1] + uy * lo),
        (a0[0] + ux * hi, a0[1] + uy * hi),
    )
