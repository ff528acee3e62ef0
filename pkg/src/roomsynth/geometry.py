"""Planar geometry kernel: oriented-box footprints, convex clipping, hulls,
minimum-area rectangles, and point/segment predicates.

All coordinates are world centimeters unless a caller says otherwise. Polygons
are (N, 2) float arrays whose last vertex implicitly reconnects to the first.
"""

from __future__ import annotations

import math

import numpy as np

Point = tuple[float, float]


def box_corners(cx: float, cy: float, length: float, width: float, rotate_deg: float) -> np.ndarray:
    """Footprint corners of an oriented box, counterclockwise.

    The box spans length along its local x axis and width along local y;
    `rotate_deg` rotates counterclockwise about (cx, cy).
    """
    r = math.radians(rotate_deg)
    c, s = math.cos(r), math.sin(r)
    hx, hy = 0.5 * length, 0.5 * width
    local = np.array([(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)], dtype=float)
    rot = np.array([(c, -s), (s, c)])
    return local @ rot.T + np.array([cx, cy])


def polygon_area(points: np.ndarray) -> float:
    """Signed area (shoelace); positive for counterclockwise loops."""
    p = np.asarray(points, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(points: np.ndarray) -> tuple[float, float]:
    """Area centroid; falls back to the vertex mean for degenerate loops."""
    p = np.asarray(points, dtype=float)
    a = polygon_area(p)
    if abs(a) < 1e-12:
        return float(p[:, 0].mean()), float(p[:, 1].mean())
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    cx = float(np.sum((x + xn) * cross) / (6.0 * a))
    cy = float(np.sum((y + yn) * cross) / (6.0 * a))
    return cx, cy


def convex_clip(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman intersection of two convex polygons.

    Returns the intersection polygon (possibly empty). `clip` must be convex;
    it is reoriented counterclockwise internally.
    """
    out = [tuple(p) for p in np.asarray(subject, dtype=float)]
    clip = np.asarray(clip, dtype=float)
    if polygon_area(clip) < 0:
        clip = clip[::-1]
    n = len(clip)
    for i in range(n):
        if not out:
            break
        a = clip[i]
        b = clip[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        inp = out
        out = []
        prev = inp[-1]
        prev_side = ex * (prev[1] - a[1]) - ey * (prev[0] - a[0])
        for cur in inp:
            cur_side = ex * (cur[1] - a[1]) - ey * (cur[0] - a[0])
            if cur_side >= 0.0:
                if prev_side < 0.0:
                    out.append(_edge_intersection(prev, cur, prev_side, cur_side))
                out.append(cur)
            elif prev_side >= 0.0:
                out.append(_edge_intersection(prev, cur, prev_side, cur_side))
            prev, prev_side = cur, cur_side
    return np.array(out, dtype=float).reshape(-1, 2)


def _edge_intersection(p: Point, q: Point, sp: float, sq: float) -> Point:
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def convex_intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    poly = convex_clip(a, b)
    if len(poly) < 3:
        return 0.0
    return abs(polygon_area(poly))


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices counterclockwise."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(iterable):
        chain: list[np.ndarray] = []
        for p in iterable:
            while len(chain) >= 2:
                o, q = chain[-2], chain[-1]
                if (q[0] - o[0]) * (p[1] - o[1]) - (q[1] - o[1]) * (p[0] - o[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def min_area_rect(points: np.ndarray) -> tuple[tuple[float, float], tuple[float, float], float]:
    """Minimum-area enclosing rectangle of a point set.

    Returns (center, (extent_along_angle, extent_perpendicular), angle_deg)
    with angle normalized to [0, 90). Uses the rotating-edge property: the
    optimal rectangle shares a direction with a hull edge.
    """
    hull = convex_hull(points)
    if len(hull) == 0:
        raise ValueError("min_area_rect needs at least one point")
    if len(hull) == 1:
        return (float(hull[0, 0]), float(hull[0, 1])), (0.0, 0.0), 0.0
    if len(hull) == 2:
        d = hull[1] - hull[0]
        ang = math.degrees(math.atan2(d[1], d[0])) % 90.0
        mid = (hull[0] + hull[1]) / 2.0
        return (float(mid[0]), float(mid[1])), (float(np.hypot(*d)), 0.0), ang

    edges = np.roll(hull, -1, axis=0) - hull
    angles = np.unique(np.mod(np.arctan2(edges[:, 1], edges[:, 0]), 0.5 * math.pi))
    best = None
    for ang in angles:
        c, s = math.cos(ang), math.sin(ang)
        rot = np.array([(c, s), (-s, c)])
        proj = hull @ rot.T
        lo = proj.min(axis=0)
        hi = proj.max(axis=0)
        ext = hi - lo
        area = ext[0] * ext[1]
        if best is None or area < best[0]:
            center_local = (lo + hi) / 2.0
            center = rot.T @ center_local
            best = (area, (float(center[0]), float(center[1])), (float(ext[0]), float(ext[1])), math.degrees(ang))
    assert best is not None
    return best[1], best[2], best[3] % 90.0


def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd (crossing-number) containment test, vectorized over points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    poly = np.asarray(polygon, dtype=float)
    if len(poly) < 3:
        return np.zeros(len(pts), dtype=bool)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    px, py = poly[:, 0], poly[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    for i in range(len(poly)):
        x0, y0, x1, y1 = px[i], py[i], qx[i], qy[i]
        if y0 == y1:
            continue
        crosses = ((y0 > y) != (y1 > y)) & (x < (x1 - x0) * (y - y0) / (y1 - y0) + x0)
        inside ^= crosses
    return inside


def point_in_polygon(x: float, y: float, polygon: np.ndarray) -> bool:
    return bool(points_in_polygon(np.array([[x, y]]), polygon)[0])


def project_point_to_segment(p: Point, a: Point, b: Point) -> tuple[Point, float]:
    """Closest point on segment ab to p, plus the distance."""
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    denom = vx * vx + vy * vy
    if denom == 0.0:
        q = (ax, ay)
    else:
        t = ((p[0] - ax) * vx + (p[1] - ay) * vy) / denom
        t = min(1.0, max(0.0, t))
        q = (ax + t * vx, ay + t * vy)
    return q, math.hypot(p[0] - q[0], p[1] - q[1])


def segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool:
    """Proper or improper intersection of closed segments p1p2 and p3p4."""

    def orient(a: Point, b: Point, c: Point) -> float:
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a: Point, b: Point, c: Point) -> bool:
        return (
            min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
            and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12
        )

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and on_seg(p3, p4, p1):
        return True
    if d2 == 0 and on_seg(p3, p4, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, p3):
        return True
    if d4 == 0 and on_seg(p1, p2, p4):
        return True
    return False


def polygon_is_simple(points: np.ndarray) -> bool:
    """True when no pair of non-adjacent edges intersects."""
    p = np.asarray(points, dtype=float)
    n = len(p)
    if n < 3:
        return False
    edges = [(tuple(p[i]), tuple(p[(i + 1) % n])) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j == (i + 1) % n) or ((j + 1) % n == i) or (i == 0 and j == n - 1):
                continue
            if segments_intersect(*edges[i], *edges[j]):
                return False
    return True
